#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "meshmove/errors.hpp"
#include "meshmove/nn/model.hpp"

namespace meshmove::nn {

/*
 * Binary model file, all integers little-endian u32:
 *   "MMDM" version hidden layers heads tensor_count
 *   per tensor: name_len name ndim dims... then f64 values (little-endian)
 */
inline constexpr char model_magic[4] = {'M', 'M', 'D', 'M'};
inline constexpr std::uint32_t model_version = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

class ByteReader {
public:
    explicit ByteReader(const std::string& data) : data_(data) {}

    void need(std::size_t n, const char* what) const {
        if (data_.size() - pos_ < n) throw ValidationError(std::string("model file truncated while reading ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }

private:
    const std::string& data_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize_model(const DeformModel& model) {
    std::string out(model_magic, 4);
    detail::put_u32(out, model_version);
    detail::put_u32(out, static_cast<std::uint32_t>(model.shape().hidden));
    detail::put_u32(out, static_cast<std::uint32_t>(model.shape().layers));
    detail::put_u32(out, static_cast<std::uint32_t>(model.shape().heads));
    detail::put_u32(out, static_cast<std::uint32_t>(model.layout().size()));
    for (const auto& t : model.layout()) {
        detail::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out += t.name;
        detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
        for (int d : t.dims) detail::put_u32(out, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < t.size(); ++i) detail::put_f64(out, model.params()[t.offset + i]);
    }
    return out;
}

inline DeformModel deserialize_model(const std::string& data) {
    detail::ByteReader in(data);
    if (in.bytes(4, "magic") != std::string(model_magic, 4)) throw ValidationError("not a model file (bad magic)");
    const auto version = in.u32("version");
    if (version != model_version) {
        throw ValidationError("unsupported model version " + std::to_string(version) + " (expected " +
                              std::to_string(model_version) + ")");
    }
    ModelShape shape;
    shape.hidden = static_cast<int>(in.u32("header"));
    shape.layers = static_cast<int>(in.u32("header"));
    shape.heads = static_cast<int>(in.u32("header"));
    shape.validate();
    DeformModel model(shape);
    const auto count = in.u32("tensor count");
    if (count != model.layout().size()) {
        throw ValidationError("model file has " + std::to_string(count) + " tensors, header shape implies " +
                              std::to_string(model.layout().size()));
    }
    for (const auto& t : model.layout()) {
        const auto name = in.bytes(in.u32("tensor name"), "tensor name");
        if (name != t.name) throw ValidationError("model tensor '" + name + "' found where '" + t.name + "' expected");
        const auto ndim = in.u32("tensor rank");
        std::vector<int> dims;
        for (std::uint32_t k = 0; k < ndim; ++k) dims.push_back(static_cast<int>(in.u32("tensor dims")));
        if (dims != t.dims) throw ValidationError("tensor '" + name + "' shape does not match the header's model shape");
        for (std::size_t i = 0; i < t.size(); ++i) model.params()[t.offset + i] = in.f64("tensor data");
    }
    if (!in.at_end()) throw ValidationError("trailing bytes after the last model tensor");
    return model;
}

inline void save_model(const DeformModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    const auto bytes = serialize_model(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("failed writing " + path);
}

inline DeformModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(data);
}

} // namespace meshmove::nn
