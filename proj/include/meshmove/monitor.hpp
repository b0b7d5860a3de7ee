#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "meshmove/delaunay.hpp"
#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"
#include "meshmove/recovery.hpp"

namespace meshmove {

enum class MonitorVariant { hessian, gradient };

struct MonitorConfig {
    double alpha = 5.0;
    MonitorVariant variant = MonitorVariant::hessian;
    bool log_transform = false;
};

inline MonitorVariant parse_monitor_variant(const std::string& s) {
    if (s == "hessian") return MonitorVariant::hessian;
    if (s == "gradient") return MonitorVariant::gradient;
    throw ValidationError("unknown monitor variant '" + s + "' (expected hessian or gradient)");
}

inline const char* to_string(MonitorVariant v) { return v == MonitorVariant::hessian ? "hessian" : "gradient"; }

struct DensitySample {
    double value = 1.0;
    Vec2 gradient{0.0, 0.0};
};

/*
 * Continuous density m(x) = 1 + alpha * r(x) / r_max, where r is the
 * piecewise-linear Delaunay interpolant of nodal raw norms taken on the mesh
 * the monitor was built from, and r_max is their maximum on that mesh. The
 * normalizer stays pinned to the source nodes, so m(x) is one fixed function
 * however far the nodes later move.
 */
class DensityFunction {
public:
    DensityFunction(std::span<const Vec2> sites, std::vector<double> raw, double alpha, double normalizer)
        : tri_(delaunay(sites)), raw_(std::move(raw)), alpha_(alpha), normalizer_(normalizer) {}

    double alpha() const noexcept { return alpha_; }
    double normalizer() const noexcept { return normalizer_; }
    const Triangulation& triangulation() const noexcept { return tri_; }

    double raw(const Vec2& q, int* hint = nullptr) const { return interpolate(tri_, raw_, q, hint).value; }

    DensitySample density(const Vec2& q, int* hint = nullptr) const {
        if (!(normalizer_ > 0.0)) return {};
        const auto r = interpolate(tri_, raw_, q, hint);
        const double k = alpha_ / normalizer_;
        return {1.0 + k * r.value, r.gradient * k};
    }

private:
    Triangulation tri_;
    std::vector<double> raw_;
    double alpha_;
    double normalizer_;
};

/*
 * Per-node density on one particular set of node positions, plus the
 * continuous function it was sampled from (needed whenever a node is
 * evaluated off its current position).
 */
struct MonitorField {
    std::vector<double> density;
    std::vector<double> raw_norm;
    MonitorConfig config;
    std::shared_ptr<const DensityFunction> function;

    const DensityFunction& density_function() const {
        if (!function) throw ValidationError("monitor has no density function attached");
        return *function;
    }
};

/// Density from raw norms by ratio normalization; all-zero norms give m = 1.
inline std::vector<double> density_from_raw(std::span<const double> raw, double alpha) {
    const double max = raw.empty() ? 0.0 : *std::max_element(raw.begin(), raw.end());
    std::vector<double> m(raw.size(), 1.0);
    if (max > 0.0) {
        for (std::size_t i = 0; i < raw.size(); ++i) m[i] = 1.0 + alpha * (raw[i] / max);
    }
    return m;
}

/// Builds the monitor from already computed nodal raw norms (post log transform).
inline MonitorField monitor_from_raw(const Mesh& mesh, std::vector<double> raw, const MonitorConfig& config) {
    if (!(config.alpha > 0.0)) throw ValidationError("monitor alpha must be > 0");
    if (raw.size() != mesh.num_nodes()) throw ValidationError("raw norm size does not match node count");
    MonitorField out;
    out.config = config;
    out.density = density_from_raw(raw, config.alpha);
    const double max = raw.empty() ? 0.0 : *std::max_element(raw.begin(), raw.end());
    out.function = std::make_shared<DensityFunction>(mesh.nodes(), raw, config.alpha, max);
    out.raw_norm = std::move(raw);
    return out;
}

/*
 * Scalar entering the recovery: a single field passes through unchanged; a
 * comma-separated list "ux,uy" is combined per node by its Euclidean norm.
 */
inline std::vector<double> monitor_input(const Mesh& mesh, const std::string& field_spec) {
    std::vector<std::string> names;
    std::stringstream ss(field_spec);
    for (std::string part; std::getline(ss, part, ',');) {
        if (!part.empty()) names.push_back(part);
    }
    if (names.empty()) throw ValidationError("empty field name");
    if (names.size() == 1) return mesh.field(names.front());
    std::vector<double> u(mesh.num_nodes(), 0.0);
    for (const auto& name : names) {
        const auto& f = mesh.field(name);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += f[i] * f[i];
    }
    for (auto& v : u) v = std::sqrt(v);
    return u;
}

inline std::vector<double> raw_monitor_norm(const Mesh& mesh, std::span<const double> u, const MonitorConfig& config) {
    std::vector<double> raw(mesh.num_nodes(), 0.0);
    // A constant field has no features; the least-squares fit would only return rounding noise.
    if (u.empty() || std::all_of(u.begin(), u.end(), [&](double v) { return v == u.front(); })) return raw;
    if (config.variant == MonitorVariant::hessian) {
        const auto h = recover_hessian(mesh, u);
        for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = h[i].frobenius();
    } else {
        const auto g = recover_gradient(mesh, u);
        for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = norm(g[i]);
    }
    if (config.log_transform) {
        for (auto& r : raw) r = std::log1p(r);
    }
    return raw;
}

inline MonitorField build_monitor(const Mesh& mesh, const std::string& field, const MonitorConfig& config = {}) {
    if (!(config.alpha > 0.0)) throw ValidationError("monitor alpha must be > 0");
    const auto u = monitor_input(mesh, field);
    return monitor_from_raw(mesh, raw_monitor_norm(mesh, u, config), config);
}

/// Re-evaluates the monitor's density function at another mesh's nodes. `hints` caches point location.
inline MonitorField sample_monitor(const MonitorField& source, const Mesh& mesh, std::vector<int>* hints = nullptr) {
    const auto& fn = source.density_function();
    MonitorField out;
    out.config = source.config;
    out.function = source.function;
    out.density.resize(mesh.num_nodes());
    out.raw_norm.resize(mesh.num_nodes());
    if (hints) hints->resize(mesh.num_nodes(), -1);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        int local = -1;
        int* h = hints ? &(*hints)[i] : &local;
        out.raw_norm[i] = fn.raw(mesh.nodes()[i], h);
        out.density[i] = fn.density(mesh.nodes()[i], h).value;
    }
    return out;
}

} // namespace meshmove
