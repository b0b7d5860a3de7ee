#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshmove/errors.hpp"
#include "meshmove/geometry.hpp"
#include "meshmove/mesh_gen.hpp"

namespace meshmove::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowMap = Eigen::Map<Eigen::RowVectorXd>;

struct ModelShape {
    int hidden = 64;
    int layers = 2;
    int heads = 2;

    void validate() const {
        if (hidden < 2 || hidden % 2 != 0) throw ValidationError("model: hidden width must be even and >= 2");
        if (layers < 1) throw ValidationError("model: need at least one deform block");
        if (heads < 1 || hidden % heads != 0) throw ValidationError("model: heads must divide the hidden width");
    }
    bool operator==(const ModelShape&) const = default;
};

struct TensorInfo {
    std::string name;
    std::vector<int> dims;
    std::size_t offset = 0;

    std::size_t size() const {
        std::size_t s = 1;
        for (int d : dims) s *= static_cast<std::size_t>(d);
        return s;
    }
};

/// Named parameter tensors, in storage order. Weights are (out, in), row-major.
inline std::vector<TensorInfo> parameter_layout(const ModelShape& s) {
    s.validate();
    const int H = s.hidden, H2 = s.hidden / 2;
    std::vector<TensorInfo> out;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::vector<int> dims) {
        TensorInfo t{std::move(name), std::move(dims), offset};
        offset += t.size();
        out.push_back(std::move(t));
    };
    add("node_enc.w1", {H, 3});
    add("node_enc.b1", {H});
    add("node_enc.w2", {H, H});
    add("node_enc.b2", {H});
    add("edge_enc.w1", {H, 2});
    add("edge_enc.b1", {H});
    add("edge_enc.w2", {H, H});
    add("edge_enc.b2", {H});
    for (int l = 0; l < s.layers; ++l) {
        const std::string p = "block" + std::to_string(l) + ".";
        for (const char* m : {"q", "k", "v", "root"}) {
            add(p + "w" + m, {H, H});
            add(p + "b" + m, {H});
        }
        add(p + "wedge", {H, H});
    }
    add("dec.w1", {H2, H});
    add("dec.b1", {H2});
    add("dec.ln_gain", {H2});
    add("dec.ln_bias", {H2});
    add("dec.w2", {2, H2});
    add("dec.b2", {2});
    return out;
}

inline std::size_t parameter_count(const ModelShape& s) {
    const auto layout = parameter_layout(s);
    return layout.back().offset + layout.back().size();
}

/// One patch as the model sees it: normalized coordinates and densities, center first.
struct PatchInput {
    std::vector<Vec2> coords;
    std::vector<double> density;
};

struct ForwardCache {
    int n = 0; // neighbor count
    RowMat X, A1, EV, EA1, E;
    std::vector<RowMat> Hs; // block inputs, plus the final state
    struct Block {
        RowMat Q, K, V, R, EE, Kc, Vc, O;
        RowMat attn; // heads x n
    };
    std::vector<Block> blocks;
    Eigen::VectorXd hc, z1, zh, z2, r, o;
    double ln_inv = 0.0;
    Vec2 y{0.5, 0.5};
};

/*
 * Patch deformation model: node and edge encoders, L attention blocks over
 * the star graph (the center attends over its neighbors, each neighbor
 * receives the center's message only), and a decoder on the center state
 * ending in a sigmoid so the prediction stays inside the unit square.
 */
class DeformModel {
public:
    explicit DeformModel(ModelShape shape = {}) : shape_(shape), layout_(parameter_layout(shape)) {
        params_.assign(layout_.back().offset + layout_.back().size(), 0.0);
        index_offsets();
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, unit layer-norm gain.
    static DeformModel initialized(ModelShape shape, std::uint64_t seed) {
        DeformModel m(shape);
        std::mt19937_64 rng(seed);
        for (const auto& t : m.layout_) {
            double* p = m.params_.data() + t.offset;
            if (t.name == "dec.ln_gain") {
                std::fill(p, p + t.size(), 1.0);
            } else if (t.dims.size() == 2) {
                const double bound = 1.0 / std::sqrt(static_cast<double>(t.dims[1]));
                for (std::size_t i = 0; i < t.size(); ++i) p[i] = bound * (2.0 * uniform01(rng) - 1.0);
            }
        }
        return m;
    }

    const ModelShape& shape() const noexcept { return shape_; }
    const std::vector<TensorInfo>& layout() const noexcept { return layout_; }
    std::vector<double>& params() noexcept { return params_; }
    const std::vector<double>& params() const noexcept { return params_; }
    std::size_t num_params() const noexcept { return params_.size(); }

    Vec2 forward(const PatchInput& in) const {
        ForwardCache cache;
        return forward(in, cache);
    }

    Vec2 forward(const PatchInput& in, ForwardCache& c) const {
        const int n = static_cast<int>(in.coords.size()) - 1;
        if (n < 1 || in.density.size() != in.coords.size()) {
            throw ValidationError("model: patch needs a center, at least one neighbor and one density per node");
        }
        const int N = n + 1, H = shape_.hidden, A = shape_.heads, d = H / A;
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
        c.n = n;

        c.X.resize(N, 3);
        for (int i = 0; i < N; ++i) c.X.row(i) << in.coords[i].x, in.coords[i].y, in.density[i];
        c.A1 = c.X * W(ne_w1_, H, 3).transpose();
        c.A1.rowwise() += B(ne_b1_, H);
        c.Hs.assign(1, RowMat());
        c.Hs[0] = c.A1.cwiseMax(0.0) * W(ne_w2_, H, H).transpose();
        c.Hs[0].rowwise() += B(ne_b2_, H);

        // Rows 0..n-1: neighbor -> center edges (center-to-neighbor vector);
        // rows n..2n-1: center -> neighbor edges (its negation).
        c.EV.resize(2 * n, 2);
        for (int j = 0; j < n; ++j) {
            const Vec2 v = in.coords[j + 1] - in.coords[0];
            c.EV.row(j) << v.x, v.y;
            c.EV.row(n + j) << -v.x, -v.y;
        }
        c.EA1 = c.EV * W(ee_w1_, H, 2).transpose();
        c.EA1.rowwise() += B(ee_b1_, H);
        c.E = c.EA1.cwiseMax(0.0) * W(ee_w2_, H, H).transpose();
        c.E.rowwise() += B(ee_b2_, H);

        c.blocks.resize(static_cast<std::size_t>(shape_.layers));
        for (int l = 0; l < shape_.layers; ++l) {
            const auto& off = blocks_[static_cast<std::size_t>(l)];
            auto& b = c.blocks[static_cast<std::size_t>(l)];
            const RowMat& Hl = c.Hs[static_cast<std::size_t>(l)];
            auto lin = [&](std::size_t w, std::size_t bias) {
                RowMat out = Hl * W(w, H, H).transpose();
                out.rowwise() += B(bias, H);
                return out;
            };
            b.Q = lin(off.wq, off.bq);
            b.K = lin(off.wk, off.bk);
            b.V = lin(off.wv, off.bv);
            b.R = lin(off.wr, off.br);
            b.EE = c.E * W(off.we, H, H).transpose();
            b.Kc = b.K.bottomRows(n) + b.EE.topRows(n);
            b.Vc = b.V.bottomRows(n) + b.EE.topRows(n);

            b.O = b.R;
            b.attn.resize(A, n);
            for (int h = 0; h < A; ++h) {
                Eigen::VectorXd s = b.Kc.middleCols(h * d, d) * b.Q.row(0).segment(h * d, d).transpose() * inv_sqrt_d;
                const double smax = s.maxCoeff();
                s = (s.array() - smax).exp();
                s /= s.sum();
                b.attn.row(h) = s.transpose();
                b.O.row(0).segment(h * d, d) += s.transpose() * b.Vc.middleCols(h * d, d);
            }
            for (int i = 1; i < N; ++i) b.O.row(i) += b.V.row(0) + b.EE.row(n + i - 1);
            c.Hs.push_back(Hl + b.O.cwiseMax(0.0));
        }

        const int H2 = H / 2;
        c.hc = c.Hs.back().row(0).transpose();
        c.z1 = W(dec_w1_, H2, H) * c.hc + B(dec_b1_, H2).transpose();
        const double mu = c.z1.mean();
        const double var = (c.z1.array() - mu).square().mean();
        c.ln_inv = 1.0 / std::sqrt(var + ln_eps);
        c.zh = (c.z1.array() - mu) * c.ln_inv;
        c.z2 = B(ln_g_, H2).transpose().cwiseProduct(c.zh) + B(ln_b_, H2).transpose();
        c.r = c.z2.cwiseMax(0.0);
        c.o = W(dec_w2_, 2, H2) * c.r + B(dec_b2_, 2).transpose();
        c.y = {squash(c.o(0)), squash(c.o(1))};
        return c.y;
    }

    /// Accumulates d(objective)/d(params) into `grad` given d(objective)/d(output).
    void backward(const ForwardCache& c, const Vec2& dy, std::span<double> grad) const {
        if (grad.size() != params_.size()) throw ValidationError("model: gradient buffer size mismatch");
        const int n = c.n, N = n + 1, H = shape_.hidden, A = shape_.heads, d = H / A, H2 = H / 2;
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

        Eigen::Vector2d d_o;
        d_o << dsquash(c.o(0), c.y.x) * dy.x, dsquash(c.o(1), c.y.y) * dy.y;
        GW(grad, dec_w2_, 2, H2) += d_o * c.r.transpose();
        GB(grad, dec_b2_, 2) += d_o.transpose();
        const Eigen::VectorXd d_r = W(dec_w2_, 2, H2).transpose() * d_o;
        const Eigen::VectorXd d_z2 = (c.z2.array() > 0.0).select(d_r, 0.0);
        GB(grad, ln_g_, H2) += d_z2.cwiseProduct(c.zh).transpose();
        GB(grad, ln_b_, H2) += d_z2.transpose();
        const Eigen::VectorXd d_zh = d_z2.cwiseProduct(B(ln_g_, H2).transpose());
        const double mean_dzh = d_zh.mean();
        const double mean_dzh_zh = d_zh.cwiseProduct(c.zh).mean();
        const Eigen::VectorXd d_z1 = c.ln_inv * (d_zh.array() - mean_dzh - c.zh.array() * mean_dzh_zh).matrix();
        GW(grad, dec_w1_, H2, H) += d_z1 * c.hc.transpose();
        GB(grad, dec_b1_, H2) += d_z1.transpose();

        RowMat dH = RowMat::Zero(N, H);
        dH.row(0) = (W(dec_w1_, H2, H).transpose() * d_z1).transpose();
        RowMat dE = RowMat::Zero(2 * n, H);

        for (int l = shape_.layers - 1; l >= 0; --l) {
            const auto& off = blocks_[static_cast<std::size_t>(l)];
            const auto& b = c.blocks[static_cast<std::size_t>(l)];
            const RowMat& Hl = c.Hs[static_cast<std::size_t>(l)];
            const RowMat dO = (b.O.array() > 0.0).select(dH, 0.0);
            RowMat dQ = RowMat::Zero(N, H), dK = RowMat::Zero(N, H), dV = RowMat::Zero(N, H);
            RowMat dEE = RowMat::Zero(2 * n, H);

            for (int i = 1; i < N; ++i) {
                dV.row(0) += dO.row(i);
                dEE.row(n + i - 1) += dO.row(i);
            }
            for (int h = 0; h < A; ++h) {
                const auto q = b.Q.row(0).segment(h * d, d);
                const auto dout = dO.row(0).segment(h * d, d);
                const Eigen::RowVectorXd a = b.attn.row(h);
                // d(out)/d(attention weight j) = v_j . dout
                const Eigen::VectorXd da = b.Vc.middleCols(h * d, d) * dout.transpose();
                const double adot = a.dot(da.transpose());
                const Eigen::VectorXd ds = a.transpose().cwiseProduct((da.array() - adot).matrix()) * inv_sqrt_d;
                dQ.row(0).segment(h * d, d) += ds.transpose() * b.Kc.middleCols(h * d, d);
                const RowMat dKc = ds * q;
                const RowMat dVc = a.transpose() * dout;
                dK.bottomRows(n).middleCols(h * d, d) += dKc;
                dV.bottomRows(n).middleCols(h * d, d) += dVc;
                dEE.topRows(n).middleCols(h * d, d) += dKc + dVc;
            }

            RowMat dHl = dH; // residual path
            auto lin_back = [&](const RowMat& dY, std::size_t w, std::size_t bias) {
                GW(grad, w, H, H) += dY.transpose() * Hl;
                GB(grad, bias, H) += dY.colwise().sum();
                dHl += dY * W(w, H, H);
            };
            lin_back(dQ, off.wq, off.bq);
            lin_back(dK, off.wk, off.bk);
            lin_back(dV, off.wv, off.bv);
            lin_back(dO, off.wr, off.br);
            GW(grad, off.we, H, H) += dEE.transpose() * c.E;
            dE += dEE * W(off.we, H, H);
            dH = std::move(dHl);
        }

        GW(grad, ne_w2_, H, H) += dH.transpose() * c.A1.cwiseMax(0.0);
        GB(grad, ne_b2_, H) += dH.colwise().sum();
        const RowMat dA1 = (c.A1.array() > 0.0).select(dH * W(ne_w2_, H, H), 0.0);
        GW(grad, ne_w1_, H, 3) += dA1.transpose() * c.X;
        GB(grad, ne_b1_, H) += dA1.colwise().sum();

        GW(grad, ee_w2_, H, H) += dE.transpose() * c.EA1.cwiseMax(0.0);
        GB(grad, ee_b2_, H) += dE.colwise().sum();
        const RowMat dEA1 = (c.EA1.array() > 0.0).select(dE * W(ee_w2_, H, H), 0.0);
        GW(grad, ee_w1_, H, 2) += dEA1.transpose() * c.EV;
        GB(grad, ee_b1_, H) += dEA1.colwise().sum();
    }

    static constexpr double ln_eps = 1e-5;
    static constexpr double logit_clamp = 30.0;

private:
    struct BlockOffsets {
        std::size_t wq, bq, wk, bk, wv, bv, wr, br, we;
    };

    static double squash(double o) { return 1.0 / (1.0 + std::exp(-std::clamp(o, -logit_clamp, logit_clamp))); }
    static double dsquash(double o, double y) { return std::abs(o) < logit_clamp ? y * (1.0 - y) : 0.0; }

    std::size_t find(const std::string& name) const {
        for (const auto& t : layout_) {
            if (t.name == name) return t.offset;
        }
        throw ValidationError("model: missing tensor " + name);
    }

    void index_offsets() {
        ne_w1_ = find("node_enc.w1"), ne_b1_ = find("node_enc.b1");
        ne_w2_ = find("node_enc.w2"), ne_b2_ = find("node_enc.b2");
        ee_w1_ = find("edge_enc.w1"), ee_b1_ = find("edge_enc.b1");
        ee_w2_ = find("edge_enc.w2"), ee_b2_ = find("edge_enc.b2");
        blocks_.clear();
        for (int l = 0; l < shape_.layers; ++l) {
            const std::string p = "block" + std::to_string(l) + ".";
            blocks_.push_back({find(p + "wq"), find(p + "bq"), find(p + "wk"), find(p + "bk"), find(p + "wv"),
                               find(p + "bv"), find(p + "wroot"), find(p + "broot"), find(p + "wedge")});
        }
        dec_w1_ = find("dec.w1"), dec_b1_ = find("dec.b1");
        ln_g_ = find("dec.ln_gain"), ln_b_ = find("dec.ln_bias");
        dec_w2_ = find("dec.w2"), dec_b2_ = find("dec.b2");
    }

    ConstMatMap W(std::size_t off, int rows, int cols) const { return {params_.data() + off, rows, cols}; }
    ConstRowMap B(std::size_t off, int size) const { return {params_.data() + off, size}; }
    static MatMap GW(std::span<double> g, std::size_t off, int rows, int cols) { return {g.data() + off, rows, cols}; }
    static RowMap GB(std::span<double> g, std::size_t off, int size) { return {g.data() + off, size}; }

    ModelShape shape_;
    std::vector<TensorInfo> layout_;
    std::vector<double> params_;
    std::size_t ne_w1_ = 0, ne_b1_ = 0, ne_w2_ = 0, ne_b2_ = 0;
    std::size_t ee_w1_ = 0, ee_b1_ = 0, ee_w2_ = 0, ee_b2_ = 0;
    std::vector<BlockOffsets> blocks_;
    std::size_t dec_w1_ = 0, dec_b1_ = 0, ln_g_ = 0, ln_b_ = 0, dec_w2_ = 0, dec_b2_ = 0;
};

} // namespace meshmove::nn
