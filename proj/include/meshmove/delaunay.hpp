#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "meshmove/errors.hpp"
#include "meshmove/geometry.hpp"

namespace meshmove {

/*
 * Delaunay triangulation of a planar point set.
 *
 * triangles[t] is counter-clockwise; neighbors[t][k] is the triangle across
 * the edge opposite vertex k, or -1 on the convex hull. Duplicate input
 * points are not inserted; duplicate_of maps them to the first copy.
 */
struct Triangulation {
    std::vector<Vec2> points;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 3>> neighbors;
    std::vector<int> duplicate_of; // -1 for inserted points
    std::vector<std::array<int, 2>> hull_edges;
    double extent = 1.0; // larger side of the bounding box

    std::size_t size() const noexcept { return triangles.size(); }
};

namespace detail {

inline double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

// Positive when d lies strictly inside the circumcircle of counter-clockwise (a, b, c),
// beyond a relative tolerance of 1e-12 on the determinant's magnitude.
inline bool in_circumcircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;
    const double t1 = alift * (bdx * cdy - cdx * bdy);
    const double t2 = blift * (cdx * ady - adx * cdy);
    const double t3 = clift * (adx * bdy - bdx * ady);
    const double mag = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                       blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                       clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
    return t1 + t2 + t3 > 1e-12 * mag;
}

class BowyerWatson {
public:
    explicit BowyerWatson(std::span<const Vec2> input) : n_(input.size()) {
        pts_.assign(input.begin(), input.end());
        Vec2 lo = pts_.front(), hi = pts_.front();
        for (const auto& p : pts_) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
        extent_ = std::max(hi.x - lo.x, hi.y - lo.y);
        const Vec2 mid{0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)};
        const double r = 1.0e4 * extent_;
        pts_.push_back({mid.x - r, mid.y - r});
        pts_.push_back({mid.x + r, mid.y - r});
        pts_.push_back({mid.x, mid.y + r});
        const int s = static_cast<int>(n_);
        tris_.push_back({s, s + 1, s + 2});
        nbr_.push_back({-1, -1, -1});
        alive_.push_back(true);
        duplicate_of_.assign(n_, -1);
    }

    Triangulation run() {
        for (std::size_t i = 0; i < n_; ++i) insert(static_cast<int>(i));
        return finish();
    }

private:
    std::size_t n_;
    double extent_ = 1.0;
    std::vector<Vec2> pts_;
    std::vector<std::array<int, 3>> tris_;
    std::vector<std::array<int, 3>> nbr_;
    std::vector<bool> alive_;
    std::vector<int> free_;
    std::vector<int> duplicate_of_;
    int hint_ = 0;

    double orient_tol() const { return 1e-14 * extent_ * extent_; }

    int locate(const Vec2& p) const {
        int t = hint_;
        const std::size_t max_steps = 4 * tris_.size() + 16;
        for (std::size_t step = 0; step < max_steps; ++step) {
            const auto& v = tris_[t];
            int next = -1;
            for (int j = 0; j < 3; ++j) {
                const int k = static_cast<int>((j + step) % 3);
                if (orient2d(pts_[v[(k + 1) % 3]], pts_[v[(k + 2) % 3]], p) < -orient_tol()) {
                    next = nbr_[t][k];
                    break;
                }
            }
            if (next < 0) return t;
            t = next;
        }
        for (std::size_t u = 0; u < tris_.size(); ++u) {
            if (!alive_[u]) continue;
            const auto& v = tris_[u];
            if (orient2d(pts_[v[0]], pts_[v[1]], p) >= -orient_tol() &&
                orient2d(pts_[v[1]], pts_[v[2]], p) >= -orient_tol() &&
                orient2d(pts_[v[2]], pts_[v[0]], p) >= -orient_tol()) {
                return static_cast<int>(u);
            }
        }
        throw NumericalError("delaunay: point location failed");
    }

    void insert(int pi) {
        const Vec2& p = pts_[pi];
        const int seed = locate(p);
        for (int v : tris_[seed]) {
            if (v < static_cast<int>(n_) && norm(pts_[v] - p) <= 1e-14 * extent_) {
                duplicate_of_[pi] = duplicate_of_[v] >= 0 ? duplicate_of_[v] : v;
                return;
            }
        }

        std::vector<char> in_cavity(tris_.size(), 0);
        std::vector<int> cavity{seed};
        in_cavity[seed] = 1;
        for (std::size_t q = 0; q < cavity.size(); ++q) {
            const int t = cavity[q];
            for (int k = 0; k < 3; ++k) {
                const int u = nbr_[t][k];
                if (u < 0 || in_cavity[u]) continue;
                const auto& w = tris_[u];
                if (in_circumcircle(pts_[w[0]], pts_[w[1]], pts_[w[2]], p)) {
                    in_cavity[u] = 1;
                    cavity.push_back(u);
                }
            }
        }

        struct Edge { int a, b, outer; };
        std::vector<Edge> boundary;
        // Repair the cavity until every boundary edge sees p strictly on its left.
        for (;;) {
            boundary.clear();
            int bad_tri = -1, bad_nbr = -1;
            for (int t : cavity) {
                if (!in_cavity[t]) continue;
                for (int k = 0; k < 3; ++k) {
                    const int u = nbr_[t][k];
                    if (u >= 0 && in_cavity[u]) continue;
                    const int a = tris_[t][(k + 1) % 3];
                    const int b = tris_[t][(k + 2) % 3];
                    if (orient2d(pts_[a], pts_[b], p) <= orient_tol() && bad_tri < 0) {
                        bad_tri = t;
                        bad_nbr = u;
                    }
                    boundary.push_back({a, b, u});
                }
            }
            if (bad_tri < 0) break;
            if (bad_tri == seed) {
                if (bad_nbr < 0) throw NumericalError("delaunay: point on the super-triangle boundary");
                in_cavity[bad_nbr] = 1;
                if (std::find(cavity.begin(), cavity.end(), bad_nbr) == cavity.end()) cavity.push_back(bad_nbr);
            } else {
                in_cavity[bad_tri] = 0;
            }
        }

        for (int t : cavity) {
            if (in_cavity[t]) {
                alive_[t] = false;
                free_.push_back(t);
            }
        }
        std::unordered_map<int, int> by_start;
        std::vector<int> created;
        created.reserve(boundary.size());
        for (const auto& e : boundary) {
            int t;
            if (!free_.empty()) {
                t = free_.back();
                free_.pop_back();
                tris_[t] = {e.a, e.b, pi};
                nbr_[t] = {-1, -1, e.outer};
                alive_[t] = true;
            } else {
                t = static_cast<int>(tris_.size());
                tris_.push_back({e.a, e.b, pi});
                nbr_.push_back({-1, -1, e.outer});
                alive_.push_back(true);
            }
            if (e.outer >= 0) {
                auto& ov = tris_[e.outer];
                for (int k = 0; k < 3; ++k) {
                    if (ov[(k + 1) % 3] == e.b && ov[(k + 2) % 3] == e.a) nbr_[e.outer][k] = t;
                }
            }
            by_start[e.a] = t;
            created.push_back(t);
        }
        for (int t : created) {
            const int next = by_start.at(tris_[t][1]);
            nbr_[t][0] = next;
            nbr_[next][1] = t;
        }
        hint_ = created.front();
    }

    Triangulation finish() {
        Triangulation out;
        out.points.assign(pts_.begin(), pts_.begin() + static_cast<std::ptrdiff_t>(n_));
        out.duplicate_of = duplicate_of_;
        out.extent = extent_;
        std::vector<int> remap(tris_.size(), -1);
        const int nn = static_cast<int>(n_);
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (!alive_[t]) continue;
            const auto& v = tris_[t];
            if (v[0] >= nn || v[1] >= nn || v[2] >= nn) continue;
            remap[t] = static_cast<int>(out.triangles.size());
            out.triangles.push_back(v);
        }
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (remap[t] < 0) continue;
            std::array<int, 3> nb{};
            for (int k = 0; k < 3; ++k) {
                const int u = nbr_[t][k];
                nb[k] = u >= 0 ? remap[u] : -1;
                if (nb[k] < 0) out.hull_edges.push_back({v_at(t, k + 1), v_at(t, k + 2)});
            }
            out.neighbors.push_back(nb);
        }
        return out;
    }

    int v_at(std::size_t t, int k) const { return tris_[t][k % 3]; }
};

} // namespace detail

/// Bowyer-Watson insertion in input order; deterministic for a fixed point order.
inline Triangulation delaunay(std::span<const Vec2> points) {
    if (points.size() < 3) throw GeometryError("delaunay needs at least 3 points");
    Vec2 lo = points.front(), hi = points.front();
    for (const auto& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GeometryError("delaunay: non-finite point");
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const double extent = std::max(hi.x - lo.x, hi.y - lo.y);
    // Collinearity: every point on the line through the first point and the farthest one.
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = norm(points[i] - points.front());
        if (d > best) { best = d; far = i; }
    }
    bool collinear = !(extent > 0.0);
    if (!collinear) {
        collinear = true;
        for (const auto& p : points) {
            if (std::abs(detail::orient2d(points.front(), points[far], p)) > 1e-12 * extent * extent) {
                collinear = false;
                break;
            }
        }
    }
    if (collinear) throw GeometryError("delaunay: all points are collinear");
    return detail::BowyerWatson(points).run();
}

/// Triangle containing q (edges inclusive), or -1 outside the hull. `hint` is read and updated.
inline int locate(const Triangulation& tri, const Vec2& q, int* hint = nullptr) {
    if (tri.triangles.empty()) return -1;
    const double tol = 1e-14 * tri.extent * tri.extent;
    auto contains = [&](int t) {
        const auto& v = tri.triangles[t];
        const auto& p = tri.points;
        return detail::orient2d(p[v[0]], p[v[1]], q) >= -tol && detail::orient2d(p[v[1]], p[v[2]], q) >= -tol &&
               detail::orient2d(p[v[2]], p[v[0]], q) >= -tol;
    };

    int t = (hint && *hint >= 0 && static_cast<std::size_t>(*hint) < tri.size()) ? *hint : 0;
    const std::size_t max_steps = tri.size() + 8;
    for (std::size_t step = 0; step < max_steps; ++step) {
        const auto& v = tri.triangles[t];
        int next = -2;
        for (int j = 0; j < 3; ++j) {
            const int k = static_cast<int>((j + step) % 3);
            if (detail::orient2d(tri.points[v[(k + 1) % 3]], tri.points[v[(k + 2) % 3]], q) < -tol) {
                next = tri.neighbors[t][k];
                break;
            }
        }
        if (next == -2) {
            if (hint) *hint = t;
            return t;
        }
        if (next == -1) break; // crossed a hull edge; confirm below
        t = next;
    }
    for (std::size_t u = 0; u < tri.size(); ++u) {
        if (contains(static_cast<int>(u))) {
            if (hint) *hint = static_cast<int>(u);
            return static_cast<int>(u);
        }
    }
    return -1;
}

struct InterpolationResult {
    double value = 0.0;
    Vec2 gradient{0.0, 0.0};
    int triangle = -1; // -1 when the query was clamped to the hull
};

/*
 * Piecewise-linear interpolation of per-point values. Inside the hull the
 * value is barycentric and the gradient is the containing triangle's constant
 * gradient. Outside, the query is clamped to the nearest hull point and the
 * gradient is zero.
 */
inline InterpolationResult interpolate(const Triangulation& tri, std::span<const double> values, const Vec2& q,
                                       int* hint = nullptr) {
    if (values.size() != tri.points.size()) {
        throw ValidationError("interpolate: value count does not match point count");
    }
    InterpolationResult out;
    const int t = locate(tri, q, hint);
    const auto& P = tri.points;
    if (t >= 0) {
        const auto& v = tri.triangles[t];
        const Vec2 &a = P[v[0]], &b = P[v[1]], &c = P[v[2]];
        const double va = values[v[0]], vb = values[v[1]], vc = values[v[2]];
        const double twice_area = cross(b - a, c - a);
        const double la = cross(b - q, c - q) / twice_area;
        const double lb = cross(c - q, a - q) / twice_area;
        const double lc = 1.0 - la - lb;
        out.value = la * va + lb * vb + lc * vc;
        const double db = vb - va, dc = vc - va;
        out.gradient = {(db * (c.y - a.y) - dc * (b.y - a.y)) / twice_area,
                        (dc * (b.x - a.x) - db * (c.x - a.x)) / twice_area};
        out.triangle = t;
        return out;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : tri.hull_edges) {
        const Vec2 &a = P[e[0]], &b = P[e[1]];
        const Vec2 ab = b - a;
        const double len2 = dot(ab, ab);
        const double s = len2 > 0.0 ? std::clamp(dot(q - a, ab) / len2, 0.0, 1.0) : 0.0;
        const double d = norm(a + s * ab - q);
        if (d < best) {
            best = d;
            out.value = (1.0 - s) * values[e[0]] + s * values[e[1]];
        }
    }
    return out;
}

} // namespace meshmove
