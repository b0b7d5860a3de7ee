#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "meshmove/direct_mover.hpp"
#include "meshmove/mesh_gen.hpp"
#include "meshmove/muniform.hpp"

using namespace meshmove;

namespace {

// Random smooth field on a perturbed mesh, with its monitor.
struct Instance {
    Mesh mesh;
    MonitorField monitor;
};

Instance random_instance(std::uint64_t seed, double h = 0.1) {
    std::mt19937_64 rng(seed);
    Mesh m = perturb_nodes(generate_unit_square_mesh(h), 0.2 * h, seed);
    const double a = 1.0 + 6.0 * uniform01(rng), b = 1.0 + 6.0 * uniform01(rng), c = uniform01(rng);
    std::vector<double> u(m.num_nodes());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Vec2 p = m.nodes()[i];
        u[i] = std::sin(a * p.x + c) * std::cos(b * p.y) + p.x * p.y;
    }
    m.set_field("u", u);
    auto mon = build_monitor(m, "u");
    return {std::move(m), std::move(mon)};
}

// Distance from q to the nearest edge of the density triangle containing it.
double distance_to_density_facet(const MonitorField& mon, const Vec2& q) {
    const auto& tri = mon.density_function().triangulation();
    const int t = locate(tri, q);
    if (t < 0) return 0.0;
    const auto& v = tri.triangles[static_cast<std::size_t>(t)];
    double d = 1e300;
    for (int e = 0; e < 3; ++e) {
        const Vec2 a = tri.points[v[e]], b = tri.points[v[(e + 1) % 3]];
        d = std::min(d, std::abs(cross(b - a, q - a)) / norm(b - a));
    }
    return d;
}

} // namespace

TEST(ElementMetric, ProductOfMeanDensityAndArea) {
    const Mesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    MonitorField mon;
    mon.density = {1.0, 2.0, 3.0};
    const auto k = element_metric(m, mon, 0);
    EXPECT_DOUBLE_EQ(k.m_K, 2.0);
    EXPECT_DOUBLE_EQ(k.area, 0.5);
    EXPECT_DOUBLE_EQ(k.L_K, 1.0);
}

TEST(ElementMetric, UsesAbsoluteArea) {
    const Mesh m({{0, 0}, {0, 1}, {1, 0}}, {{0, 1, 2}});
    MonitorField mon;
    mon.density = {1.0, 1.0, 1.0};
    EXPECT_DOUBLE_EQ(element_metric(m, mon, 0).area, -0.5);
    EXPECT_DOUBLE_EQ(element_metric(m, mon, 0).L_K, 0.5);
}

TEST(Variance, PopulationConvention) {
    EXPECT_DOUBLE_EQ(population_variance(std::vector<double>{1.0, 3.0}), 1.0);
    EXPECT_DOUBLE_EQ(population_variance(std::vector<double>{5.0}), 0.0);
    EXPECT_DOUBLE_EQ(population_variance(std::vector<double>{}), 0.0);
}

TEST(MUniformLoss, BernoulliPatchExample) {
    // 2x2 grid: the center patch has six elements of area 1/8; two of them touch node 0.
    const Mesh m = generate_structured_square_mesh(2);
    std::vector<double> raw(m.num_nodes(), 0.0);
    raw[0] = 1.0;
    const auto mon = monitor_from_raw(m, raw, {});
    const auto patches = build_interior_patches(m);
    ASSERT_EQ(patches.size(), 1u);
    ASSERT_EQ(patches[0].incident_elements.size(), 6u);
    const double p = 2.0 / 6.0;
    const double hi = (6.0 + 1.0 + 1.0) / 3.0 * 0.125, lo = 0.125;
    const double expected = p * (1.0 - p) * (hi - lo) * (hi - lo);
    EXPECT_NEAR(patch_variance(m, mon, patches[0]), expected, 1e-15);
    EXPECT_NEAR(muniform_loss(m, mon, patches), 100.0 * expected, 1e-13);
    EXPECT_NEAR(muniform_loss(m, mon, patches, 1.0), expected, 1e-15);
}

TEST(MUniformLoss, HandComputedTwoPatchMean) {
    // Four disjoint triangles with unit density, so L_K is the area. Patch variances
    // ((a - b) / 2)^2 come out as 0.01 and 0.03, and 100 * mean = 2.0.
    const std::vector<double> areas{0.1, 0.3, 0.1, 0.1 + 2.0 * std::sqrt(0.03)};
    std::vector<Vec2> nodes;
    std::vector<Triangle> elems;
    for (std::size_t k = 0; k < areas.size(); ++k) {
        const double x0 = 2.0 * static_cast<double>(k);
        const int b = static_cast<int>(nodes.size());
        nodes.insert(nodes.end(), {{x0, 0.0}, {x0 + 1.0, 0.0}, {x0, 2.0 * areas[k]}});
        elems.push_back({b, b + 1, b + 2});
    }
    const Mesh m(nodes, elems);
    const auto mon = monitor_from_raw(m, std::vector<double>(m.num_nodes(), 0.0), {});
    NodePatch a, b;
    a.incident_elements = {0, 1};
    b.incident_elements = {2, 3};
    EXPECT_NEAR(patch_variance(m, mon, a), 0.01, 1e-15);
    EXPECT_NEAR(patch_variance(m, mon, b), 0.03, 1e-15);
    EXPECT_NEAR(muniform_loss(m, mon, std::vector<NodePatch>{a, b}), 2.0, 1e-12);
}

TEST(MUniformLoss, RejectsEmptyPatchSetAndBadScale) {
    const Mesh m = generate_structured_square_mesh(2);
    const auto mon = monitor_from_raw(m, std::vector<double>(m.num_nodes(), 0.0), {});
    EXPECT_THROW(muniform_loss(m, mon, std::vector<NodePatch>{}), ValidationError);
    EXPECT_THROW(muniform_loss(m, mon, build_interior_patches(m), 0.0), ValidationError);
}

TEST(MUniformLoss, EqualsScaledMeanOfPatchVariances) {
    const auto inst = random_instance(5);
    const auto patches = build_interior_patches(inst.mesh);
    double sum = 0.0;
    for (const auto& p : patches) sum += patch_variance(inst.mesh, inst.monitor, p);
    EXPECT_NEAR(muniform_loss(inst.mesh, inst.monitor, patches), 100.0 * sum / patches.size(), 1e-15);
}

TEST(MUniformLoss, InvariantToPatchOrder) {
    const auto inst = random_instance(6);
    auto patches = build_interior_patches(inst.mesh);
    const double before = muniform_loss(inst.mesh, inst.monitor, patches);
    std::mt19937_64 rng(1);
    std::shuffle(patches.begin(), patches.end(), rng);
    EXPECT_NEAR(muniform_loss(inst.mesh, inst.monitor, patches), before, 1e-14 * before);
}

TEST(MUniformLoss, InvariantToTranslation) {
    const auto inst = random_instance(7);
    std::vector<Vec2> shifted = inst.mesh.nodes();
    for (auto& p : shifted) p += Vec2{3.0, -2.0};
    const Mesh moved = inst.mesh.with_nodes(shifted);
    const auto mon = monitor_from_raw(moved, inst.monitor.raw_norm, inst.monitor.config);
    const auto patches = build_interior_patches(inst.mesh);
    const double a = muniform_loss(inst.mesh, inst.monitor, patches);
    EXPECT_NEAR(muniform_loss(moved, mon, patches), a, 1e-9 * a);
}

TEST(TotalVariance, IdentityOnRandomPairs) {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto inst = random_instance(seed);
        const auto patches = build_interior_patches(inst.mesh);
        const auto tv = total_variance_check(inst.mesh, inst.monitor, patches);
        EXPECT_NEAR(tv.var_LK, tv.mean_within + tv.var_between, 1e-12 * tv.var_LK) << "seed " << seed;
        EXPECT_LE(tv.mean_within, tv.var_LK * (1.0 + 1e-12));
        EXPECT_GE(tv.var_between, 0.0);

        // Brute-force weighted moments as an independent route.
        double w_sum = 0.0, mean = 0.0, second = 0.0;
        for (const auto& p : patches) {
            const double w = 1.0 / (patches.size() * p.incident_elements.size());
            for (int e : p.incident_elements) {
                const double L = element_metric(inst.mesh, inst.monitor, e).L_K;
                w_sum += w;
                mean += w * L;
                second += w * L * L;
            }
        }
        EXPECT_NEAR(w_sum, 1.0, 1e-12);
        EXPECT_NEAR(tv.var_LK, second - mean * mean, 1e-9 * tv.var_LK);
    }
}

TEST(TotalVariance, ConstantDensityOnStructuredGridVanishes) {
    const Mesh m = generate_structured_square_mesh(6);
    const auto mon = monitor_from_raw(m, std::vector<double>(m.num_nodes(), 0.0), {});
    const auto tv = total_variance_check(m, mon);
    EXPECT_NEAR(tv.var_LK, 0.0, 1e-20);
    EXPECT_NEAR(global_uniformity(m, mon), 0.0, 1e-20);
}

TEST(PatchVariance, OverrideAtCurrentPositionMatches) {
    const auto inst = random_instance(8);
    for (const auto& p : build_interior_patches(inst.mesh)) {
        const double a = patch_variance(inst.mesh, inst.monitor, p);
        const double b = patch_variance(inst.mesh, inst.monitor, p, inst.mesh.node(p.center));
        EXPECT_NEAR(a, b, 1e-12 * std::max(a, 1e-12));
    }
}

TEST(PatchVariance, GradientMatchesFiniteDifferences) {
    int checked = 0;
    std::mt19937_64 rng(42);
    for (std::uint64_t seed = 1; seed <= 6 && checked < 300; ++seed) {
        const auto inst = random_instance(seed);
        for (const auto& p : build_interior_patches(inst.mesh)) {
            const Vec2 c = inst.mesh.node(p.center);
            const double r = 0.1 * shortest_incident_edge(inst.mesh, p.center);
            const Vec2 at = c + Vec2{(2.0 * uniform01(rng) - 1.0) * r, (2.0 * uniform01(rng) - 1.0) * r};
            if (distance_to_density_facet(inst.monitor, at) < 1e-4) continue;
            const double h = 1e-6;
            const Vec2 fd{(patch_variance(inst.mesh, inst.monitor, p, at + Vec2{h, 0}) -
                           patch_variance(inst.mesh, inst.monitor, p, at - Vec2{h, 0})) / (2 * h),
                          (patch_variance(inst.mesh, inst.monitor, p, at + Vec2{0, h}) -
                           patch_variance(inst.mesh, inst.monitor, p, at - Vec2{0, h})) / (2 * h)};
            const Vec2 g = patch_variance_gradient(inst.mesh, inst.monitor, p, at);
            EXPECT_LE(norm(g - fd), 1e-5 * norm(g) + 1e-15) << "seed " << seed << " node " << p.center;
            ++checked;
        }
    }
    EXPECT_GE(checked, 100);
}

TEST(PatchVariance, SymmetricPatchHasZeroGradient) {
    // Regular hexagon around the origin with unit density: every L_K equal.
    std::vector<Vec2> nodes{{0, 0}};
    for (int k = 0; k < 6; ++k) nodes.push_back({std::cos(k * M_PI / 3), std::sin(k * M_PI / 3)});
    std::vector<Triangle> elems;
    for (int k = 0; k < 6; ++k) elems.push_back({0, 1 + k, 1 + (k + 1) % 6});
    const Mesh m(nodes, elems);
    const auto mon = monitor_from_raw(m, std::vector<double>(m.num_nodes(), 0.0), {});
    const auto p = build_patch(m, 0);
    EXPECT_NEAR(patch_variance(m, mon, p), 0.0, 1e-30);
    const Vec2 g = patch_variance_gradient(m, mon, p);
    EXPECT_NEAR(g.x, 0.0, 1e-15);
    EXPECT_NEAR(g.y, 0.0, 1e-15);
}

TEST(PatchVariance, HandDerivedGradientOfTwoElementPatch) {
    // Center c=(x, y) with elements (c, (1,0), (0,1)) and (c, (0,1), (-1,0)), unit density.
    // A1 = (1 - x - y)/2, A2 = (1 + x - y)/2 for c near the origin.
    // Var = (A1 - A2)^2 / 4 = x^2 / 4, so dVar/dx = x/2, dVar/dy = 0.
    const Mesh m({{0.1, 0.2}, {1, 0}, {0, 1}, {-1, 0}}, {{0, 1, 2}, {0, 2, 3}});
    const auto mon = monitor_from_raw(m, std::vector<double>(m.num_nodes(), 0.0), {});
    const auto p = build_patch(m, 0);
    EXPECT_NEAR(patch_variance(m, mon, p), 0.01 / 4.0, 1e-15);
    const Vec2 g = patch_variance_gradient(m, mon, p);
    EXPECT_NEAR(g.x, 0.05, 1e-15);
    EXPECT_NEAR(g.y, 0.0, 1e-15);
}
