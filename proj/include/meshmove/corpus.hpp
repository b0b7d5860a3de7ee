#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"
#include "meshmove/mesh_gen.hpp"
#include "meshmove/mesh_io.hpp"
#include "meshmove/monitor.hpp"

namespace meshmove {

enum class CorpusScale { desk, full };

inline CorpusScale parse_corpus_scale(const std::string& s) {
    if (s == "desk") return CorpusScale::desk;
    if (s == "full") return CorpusScale::full;
    throw ValidationError("unknown corpus scale '" + s + "' (expected desk or full)");
}

inline const char* to_string(CorpusScale s) { return s == CorpusScale::desk ? "desk" : "full"; }

struct TrainingField {
    std::string name;
    std::function<double(double, double)> u;
};

/// The four analytic training fields.
inline const std::vector<TrainingField>& training_fields() {
    static const std::vector<TrainingField> fields = [] {
        using std::cos;
        using std::exp;
        using std::pow;
        using std::sin;
        constexpr double pi = std::numbers::pi;
        return std::vector<TrainingField>{
            {"u1", [=](double x, double y) { return 10.0 * sin(2 * pi * x) * sin(2 * pi * y); }},
            {"u2", [=](double x, double y) { return -5.0 / pi * sin(pi * x) * sin(pi * y); }},
            {"u3", [=](double x, double y) { return 10.0 * (pow(sin(5 * x), 10) + cos(10 + 25 * x * y) * cos(5 * x)); }},
            {"u4", [=](double x, double y) { return 10.0 * (1.0 - exp(x) * cos(4 * pi * y)); }},
        };
    }();
    return fields;
}

struct CorpusSpec {
    double edge_length;
    int perturbed_copies; // per field, on top of the unperturbed mesh
};

/// desk: 0.1 mesh, 1 + 2 copies per field; full: 0.05 mesh, 1 + 4 copies (about 10k nodes in total).
inline CorpusSpec corpus_spec(CorpusScale scale) {
    return scale == CorpusScale::desk ? CorpusSpec{0.1, 2} : CorpusSpec{0.05, 4};
}

/// One training mesh with fields u, raw_norm and density (the frozen monitor).
struct CorpusSample {
    std::string name;
    Mesh mesh;
};

struct Corpus {
    CorpusScale scale = CorpusScale::desk;
    std::uint64_t seed = 0;
    MonitorConfig monitor;
    std::vector<CorpusSample> samples;

    std::size_t total_nodes() const {
        std::size_t n = 0;
        for (const auto& s : samples) n += s.mesh.num_nodes();
        return n;
    }

    MonitorField sample_monitor(std::size_t i) const {
        return monitor_from_raw(samples.at(i).mesh, samples.at(i).mesh.field("raw_norm"), monitor);
    }
};

/*
 * Each field is evaluated on the unperturbed mesh and on perturbed copies
 * (interior nodes displaced by up to a quarter of the edge length). The
 * monitor is computed once per sample and stored with it.
 */
inline Corpus generate_corpus(CorpusScale scale, std::uint64_t seed, const MonitorConfig& monitor = {}) {
    const CorpusSpec spec = corpus_spec(scale);
    const Mesh base = generate_unit_square_mesh(spec.edge_length);
    std::mt19937_64 seeds(seed);
    Corpus corpus;
    corpus.scale = scale;
    corpus.seed = seed;
    corpus.monitor = monitor;
    for (const auto& field : training_fields()) {
        for (int copy = 0; copy <= spec.perturbed_copies; ++copy) {
            Mesh mesh = copy == 0 ? base : perturb_nodes(base, 0.25 * spec.edge_length, seeds());
            std::vector<double> u(mesh.num_nodes());
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = field.u(mesh.nodes()[i].x, mesh.nodes()[i].y);
            auto raw = raw_monitor_norm(mesh, u, monitor);
            mesh.set_field("density", density_from_raw(raw, monitor.alpha));
            mesh.set_field("raw_norm", std::move(raw));
            mesh.set_field("u", std::move(u));
            corpus.samples.push_back({field.name + "/" + (copy == 0 ? std::string("base") : "perturbed" + std::to_string(copy)),
                                      std::move(mesh)});
        }
    }
    return corpus;
}

inline std::string format_corpus(const Corpus& corpus) {
    nlohmann::json doc;
    doc["format"] = "meshmove-corpus";
    doc["version"] = 1;
    doc["scale"] = to_string(corpus.scale);
    doc["seed"] = corpus.seed;
    doc["monitor"] = {{"alpha", corpus.monitor.alpha},
                      {"variant", to_string(corpus.monitor.variant)},
                      {"log_transform", corpus.monitor.log_transform}};
    doc["samples"] = nlohmann::json::array();
    for (const auto& s : corpus.samples) {
        nlohmann::json js;
        js["name"] = s.name;
        js["mesh"] = mesh_to_json(s.mesh);
        js["patch_centers"] = s.mesh.interior_nodes();
        doc["samples"].push_back(std::move(js));
    }
    return doc.dump() + "\n";
}

inline Corpus parse_corpus(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("corpus: ") + e.what(), detail::line_of_offset(text, e.byte));
    }
    try {
        if (doc.value("format", std::string()) != "meshmove-corpus") throw ValidationError("not a corpus file");
        if (doc.at("version").get<int>() != 1) throw ValidationError("unsupported corpus version");
        Corpus c;
        c.scale = parse_corpus_scale(doc.at("scale").get<std::string>());
        c.seed = doc.at("seed").get<std::uint64_t>();
        const auto& m = doc.at("monitor");
        c.monitor.alpha = m.at("alpha").get<double>();
        c.monitor.variant = parse_monitor_variant(m.at("variant").get<std::string>());
        c.monitor.log_transform = m.at("log_transform").get<bool>();
        for (const auto& js : doc.at("samples")) {
            Mesh mesh = mesh_from_json(js.at("mesh"));
            for (const char* f : {"u", "raw_norm", "density"}) {
                if (!mesh.has_field(f)) throw ValidationError(std::string("corpus sample lacks field ") + f);
            }
            c.samples.push_back({js.at("name").get<std::string>(), std::move(mesh)});
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("corpus: ") + e.what());
    }
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    detail::write_text_file(path, format_corpus(corpus));
}

inline Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(detail::read_text_file(path)); }

inline Corpus gen_training_corpus(const std::filesystem::path& out, CorpusScale scale, std::uint64_t seed,
                                  const MonitorConfig& monitor = {}) {
    Corpus c = generate_corpus(scale, seed, monitor);
    save_corpus(c, out);
    return c;
}

} // namespace meshmove
