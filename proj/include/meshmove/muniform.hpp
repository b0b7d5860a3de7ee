#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"
#include "meshmove/monitor.hpp"
#include "meshmove/patch.hpp"

namespace meshmove {

inline constexpr double default_loss_scale = 100.0;

struct ElementMetric {
    int element = -1;
    double m_K = 1.0;  // mean of the three vertex densities
    double area = 0.0; // signed
    double L_K = 0.0;  // m_K * |area|
};

inline ElementMetric element_metric(const Mesh& mesh, const MonitorField& monitor, int e) {
    const auto& t = mesh.element(e);
    ElementMetric out;
    out.element = e;
    out.m_K = (monitor.density[t[0]] + monitor.density[t[1]] + monitor.density[t[2]]) / 3.0;
    out.area = mesh.element_area(e);
    out.L_K = out.m_K * std::abs(out.area);
    return out;
}

/// Population variance (divide by n).
inline double population_variance(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / static_cast<double>(xs.size());
}

/*
 * Patch variance and its derivatives with respect to the center position.
 * The center sits at `at` with density taken from the monitor's continuous
 * function there; every other vertex keeps its current position and nodal
 * density. `curvature` is the Gauss-Newton approximation
 * (2/n) sum (dL_l - mean dL)(dL_l - mean dL)^T.
 */
struct PatchVarianceEval {
    double variance = 0.0;
    Vec2 gradient{0.0, 0.0};
    double curvature[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

inline PatchVarianceEval evaluate_patch_variance(const Mesh& mesh, const MonitorField& monitor,
                                                 const NodePatch& patch, const Vec2& at, int* hint = nullptr) {
    const auto m_center = monitor.density_function().density(at, hint);
    const std::size_t n = patch.incident_elements.size();
    std::vector<double> L(n);
    std::vector<Vec2> dL(n);
    for (std::size_t l = 0; l < n; ++l) {
        const auto& t = mesh.element(patch.incident_elements[l]);
        // Rotate so the center comes first; (center, a, b) keeps the stored orientation.
        int k = 0;
        while (t[k] != patch.center) ++k;
        const int a = t[(k + 1) % 3];
        const int b = t[(k + 2) % 3];
        const Vec2& pa = mesh.node(a);
        const Vec2& pb = mesh.node(b);
        const double area = signed_area(at, pa, pb);
        const double sgn = area >= 0.0 ? 1.0 : -1.0;
        const Vec2 d_area{0.5 * (pa.y - pb.y), 0.5 * (pb.x - pa.x)};
        const double mK = (m_center.value + monitor.density[a] + monitor.density[b]) / 3.0;
        L[l] = mK * std::abs(area);
        dL[l] = m_center.gradient * (std::abs(area) / 3.0) + d_area * (mK * sgn);
    }
    PatchVarianceEval out;
    if (n == 0) return out;
    const double inv_n = 1.0 / static_cast<double>(n);
    double mean = 0.0;
    Vec2 dmean{0.0, 0.0};
    for (std::size_t l = 0; l < n; ++l) {
        mean += L[l];
        dmean += dL[l];
    }
    mean *= inv_n;
    dmean *= inv_n;
    for (std::size_t l = 0; l < n; ++l) {
        const double r = L[l] - mean;
        const Vec2 dr = dL[l] - dmean;
        out.variance += r * r;
        out.gradient += dr * (2.0 * r);
        out.curvature[0][0] += 2.0 * dr.x * dr.x;
        out.curvature[0][1] += 2.0 * dr.x * dr.y;
        out.curvature[1][1] += 2.0 * dr.y * dr.y;
    }
    out.variance *= inv_n;
    out.gradient *= inv_n;
    out.curvature[0][0] *= inv_n;
    out.curvature[0][1] *= inv_n;
    out.curvature[1][1] *= inv_n;
    out.curvature[1][0] = out.curvature[0][1];
    return out;
}

/*
 * Population variance of L_K over the elements incident to the patch center.
 * With an override, the center is evaluated at that point instead (areas and
 * interpolated center density); neighbors stay where they are.
 */
inline double patch_variance(const Mesh& mesh, const MonitorField& monitor, const NodePatch& patch,
                             std::optional<Vec2> center_override = std::nullopt) {
    if (center_override) return evaluate_patch_variance(mesh, monitor, patch, *center_override).variance;
    std::vector<double> L;
    L.reserve(patch.incident_elements.size());
    for (int e : patch.incident_elements) L.push_back(element_metric(mesh, monitor, e).L_K);
    return population_variance(L);
}

/// lambda times the mean patch variance.
inline double muniform_loss(const Mesh& mesh, const MonitorField& monitor, std::span<const NodePatch> patches,
                            double lambda = default_loss_scale) {
    if (patches.empty()) throw ValidationError("muniform_loss: empty patch set");
    if (!(lambda > 0.0)) throw ValidationError("muniform_loss: lambda must be > 0");
    double sum = 0.0;
    for (const auto& p : patches) sum += patch_variance(mesh, monitor, p);
    return lambda * sum / static_cast<double>(patches.size());
}

/// Population variance of L_K over every element of the mesh.
inline double global_uniformity(const Mesh& mesh, const MonitorField& monitor) {
    std::vector<double> L(mesh.num_elements());
    for (std::size_t e = 0; e < L.size(); ++e) L[e] = element_metric(mesh, monitor, static_cast<int>(e)).L_K;
    return population_variance(L);
}

struct TotalVariance {
    double var_LK = 0.0;      // variance of L over the patch-then-element sampling
    double mean_within = 0.0; // mean over patches of the patch variance
    double var_between = 0.0; // variance over patches of the patch mean
};

/*
 * Law-of-total-variance decomposition for L sampled by first drawing a patch
 * uniformly, then one of its elements uniformly. Each element occurrence in
 * patch i carries weight 1 / (P * N_i), which makes
 * var_LK = mean_within + var_between an identity.
 */
inline TotalVariance total_variance_check(const Mesh& mesh, const MonitorField& monitor,
                                          std::span<const NodePatch> patches) {
    TotalVariance out;
    if (patches.empty()) return out;
    const double inv_p = 1.0 / static_cast<double>(patches.size());
    std::vector<std::vector<double>> values(patches.size());
    std::vector<double> means(patches.size(), 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < patches.size(); ++i) {
        for (int e : patches[i].incident_elements) values[i].push_back(element_metric(mesh, monitor, e).L_K);
        for (double v : values[i]) means[i] += v;
        means[i] /= static_cast<double>(values[i].size());
        grand += means[i] * inv_p;
    }
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const double w = inv_p / static_cast<double>(values[i].size());
        for (double v : values[i]) out.var_LK += w * (v - grand) * (v - grand);
        out.mean_within += inv_p * population_variance(values[i]);
        out.var_between += inv_p * (means[i] - grand) * (means[i] - grand);
    }
    return out;
}

inline TotalVariance total_variance_check(const Mesh& mesh, const MonitorField& monitor) {
    const auto patches = build_interior_patches(mesh);
    return total_variance_check(mesh, monitor, patches);
}

} // namespace meshmove
