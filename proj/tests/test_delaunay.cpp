#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "meshmove/delaunay.hpp"
#include "meshmove/mesh_gen.hpp"

using namespace meshmove;

namespace {

std::vector<Vec2> random_cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vec2> pts(n);
    for (auto& p : pts) p = {uniform01(rng), uniform01(rng)};
    return pts;
}

double triangulated_area(const Triangulation& tri) {
    double a = 0.0;
    for (const auto& t : tri.triangles) a += signed_area(tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]);
    return a;
}

// Monotone-chain convex hull area, independent of the triangulation code.
double hull_area(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    std::vector<Vec2> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(h[k - 1] - h[k - 2], pts[i - 1] - h[k - 2]) <= 0) --k;
        h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
    double a = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) a += 0.5 * cross(h[i], h[(i + 1) % h.size()]);
    return a;
}

// Strict circumcircle containment in long double, used as the brute-force oracle.
bool strictly_inside_circle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    using L = long double;
    const L adx = L(a.x) - d.x, ady = L(a.y) - d.y, bdx = L(b.x) - d.x, bdy = L(b.y) - d.y;
    const L cdx = L(c.x) - d.x, cdy = L(c.y) - d.y;
    const L det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady) +
                  (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    return det > 1e-9L;
}

} // namespace

TEST(Delaunay, ThreePointsOneTriangle) {
    const std::vector<Vec2> pts{{0, 0}, {1, 0}, {0, 1}};
    const auto tri = delaunay(pts);
    ASSERT_EQ(tri.size(), 1u);
    EXPECT_GT(signed_area(pts[tri.triangles[0][0]], pts[tri.triangles[0][1]], pts[tri.triangles[0][2]]), 0.0);
}

TEST(Delaunay, SquareCornersTwoTriangles) {
    const std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const auto tri = delaunay(pts);
    EXPECT_EQ(tri.size(), 2u);
    EXPECT_NEAR(triangulated_area(tri), 1.0, 1e-14);
}

TEST(Delaunay, CollinearInputRejected) {
    const std::vector<Vec2> pts{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    EXPECT_THROW(delaunay(pts), GeometryError);
    EXPECT_THROW(delaunay(std::vector<Vec2>{{0, 0}, {1, 0}}), GeometryError);
}

TEST(Delaunay, DuplicatesAreSkipped) {
    const std::vector<Vec2> pts{{0, 0}, {1, 0}, {0, 1}, {1, 0}, {1, 1}};
    const auto tri = delaunay(pts);
    EXPECT_EQ(tri.duplicate_of[3], 1);
    EXPECT_EQ(tri.size(), 2u);
}

TEST(Delaunay, EmptyCircumcircleRandomCloud) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto pts = random_cloud(200, seed);
        const auto tri = delaunay(pts);
        EXPECT_EQ(tri.size(), 2 * pts.size() - 2 - tri.hull_edges.size());
        for (const auto& t : tri.triangles) {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (static_cast<int>(i) == t[0] || static_cast<int>(i) == t[1] || static_cast<int>(i) == t[2]) continue;
                ASSERT_FALSE(strictly_inside_circle(pts[t[0]], pts[t[1]], pts[t[2]], pts[i]));
            }
        }
        EXPECT_NEAR(triangulated_area(tri), hull_area(pts), 1e-12);
    }
}

TEST(Delaunay, CoversMeshNodesHull) {
    const Mesh m = perturb_nodes(generate_unit_square_mesh(0.04), 0.01, 8);
    const auto tri = delaunay(m.nodes());
    EXPECT_NEAR(triangulated_area(tri), 1.0, 1e-12);
    for (const auto& nb : tri.neighbors) {
        for (int k = 0; k < 3; ++k) {
            if (nb[k] < 0) continue;
            const auto& back = tri.neighbors[static_cast<std::size_t>(nb[k])];
            EXPECT_TRUE(std::find(back.begin(), back.end(), static_cast<int>(&nb - tri.neighbors.data())) != back.end());
        }
    }
}

TEST(Interpolate, LinearReproduction) {
    const auto pts = random_cloud(300, 9);
    const auto tri = delaunay(pts);
    std::vector<double> vals(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = 2.0 * pts[i].x + 3.0 * pts[i].y - 0.7;
    std::mt19937_64 rng(10);
    int hint = -1;
    int checked = 0;
    while (checked < 1000) {
        const Vec2 q{uniform01(rng), uniform01(rng)};
        if (locate(tri, q) < 0) continue;
        const auto r = interpolate(tri, vals, q, &hint);
        EXPECT_NEAR(r.value, 2.0 * q.x + 3.0 * q.y - 0.7, 1e-10);
        EXPECT_NEAR(r.gradient.x, 2.0, 1e-8);
        EXPECT_NEAR(r.gradient.y, 3.0, 1e-8);
        ++checked;
    }
}

TEST(Interpolate, DataPointsAndConvexity) {
    const auto pts = random_cloud(100, 4);
    const auto tri = delaunay(pts);
    std::vector<double> vals(pts.size());
    std::mt19937_64 rng(5);
    for (auto& v : vals) v = uniform01(rng) * 10.0 - 5.0;
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(interpolate(tri, vals, pts[i]).value, vals[i], 1e-12);
    for (int k = 0; k < 500; ++k) {
        const Vec2 q{uniform01(rng), uniform01(rng)};
        const auto r = interpolate(tri, vals, q);
        if (r.triangle < 0) continue;
        const auto& t = tri.triangles[static_cast<std::size_t>(r.triangle)];
        const double lo = std::min({vals[t[0]], vals[t[1]], vals[t[2]]});
        const double hi = std::max({vals[t[0]], vals[t[1]], vals[t[2]]});
        EXPECT_GE(r.value, lo - 1e-12);
        EXPECT_LE(r.value, hi + 1e-12);
    }
}

TEST(Interpolate, OutsideHullClampsToNearestHullPoint) {
    const std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const auto tri = delaunay(pts);
    const std::vector<double> vals{0.0, 1.0, 3.0, 2.0}; // f = x + 2y on the corners
    const auto r = interpolate(tri, vals, {1.5, 0.5});
    EXPECT_NEAR(r.value, 2.0, 1e-14); // nearest hull point (1, 0.5)
    EXPECT_EQ(r.gradient, (Vec2{0.0, 0.0}));
    EXPECT_EQ(r.triangle, -1);
    EXPECT_NEAR(interpolate(tri, vals, {-1.0, -1.0}).value, 0.0, 1e-14);
}

TEST(Interpolate, GradientMatchesFiniteDifferences) {
    const auto pts = random_cloud(150, 21);
    const auto tri = delaunay(pts);
    std::vector<double> vals(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = std::sin(5.0 * pts[i].x) * std::cos(3.0 * pts[i].y);
    std::mt19937_64 rng(22);
    int checked = 0;
    for (int k = 0; k < 5000 && checked < 200; ++k) {
        const Vec2 q{uniform01(rng), uniform01(rng)};
        const int t = locate(tri, q);
        if (t < 0) continue;
        const auto& v = tri.triangles[static_cast<std::size_t>(t)];
        bool near_edge = false;
        for (int e = 0; e < 3; ++e) {
            const Vec2 a = tri.points[v[e]], b = tri.points[v[(e + 1) % 3]];
            near_edge |= std::abs(cross(b - a, q - a)) / norm(b - a) < 1e-3;
        }
        if (near_edge) continue;
        const double h = 1e-6;
        const double gx = (interpolate(tri, vals, q + Vec2{h, 0}).value - interpolate(tri, vals, q - Vec2{h, 0}).value) / (2 * h);
        const double gy = (interpolate(tri, vals, q + Vec2{0, h}).value - interpolate(tri, vals, q - Vec2{0, h}).value) / (2 * h);
        const auto r = interpolate(tri, vals, q);
        EXPECT_NEAR(r.gradient.x, gx, 1e-4);
        EXPECT_NEAR(r.gradient.y, gy, 1e-4);
        ++checked;
    }
    EXPECT_EQ(checked, 200);
}

TEST(Interpolate, HintDoesNotChangeResult) {
    const Mesh m = generate_unit_square_mesh(0.05);
    const auto tri = delaunay(m.nodes());
    std::vector<double> vals(m.num_nodes());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = m.nodes()[i].x * m.nodes()[i].x;
    std::mt19937_64 rng(3);
    int hint = 0;
    for (int k = 0; k < 300; ++k) {
        const Vec2 q{uniform01(rng), uniform01(rng)};
        EXPECT_NEAR(interpolate(tri, vals, q, &hint).value, interpolate(tri, vals, q).value, 1e-14);
    }
}
