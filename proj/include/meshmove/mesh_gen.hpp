#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"

namespace meshmove {

/// Uniform double in [0, 1) from a 64-bit engine; portable across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace detail {

// Triangulates the strip between two x-sorted rows spanning the same x range.
inline void zip_rows(const std::vector<int>& lower, const std::vector<int>& upper,
                     const std::vector<Vec2>& nodes, std::vector<Triangle>& out) {
    std::size_t i = 0, j = 0;
    while (i + 1 < lower.size() || j + 1 < upper.size()) {
        const bool advance_lower =
            j + 1 == upper.size() ||
            (i + 1 < lower.size() && nodes[lower[i + 1]].x < nodes[upper[j + 1]].x);
        if (advance_lower) {
            out.push_back({lower[i], lower[i + 1], upper[j]});
            ++i;
        } else {
            out.push_back({lower[i], upper[j + 1], upper[j]});
            ++j;
        }
    }
}

} // namespace detail

/*
 * Near-equilateral triangulation of [0,1]^2. Rows are spaced h*sqrt(3)/2
 * apart and every other row is shifted by half a spacing, with extra nodes
 * pinned to x = 0 and x = 1; interior nodes have degree 6.
 *
 * Element counts for h = 0.05, 0.04, 0.02: 943, 1479, 5858.
 */
inline Mesh generate_unit_square_mesh(double target_edge_length) {
    if (!(target_edge_length > 0.0 && target_edge_length < 1.0)) {
        throw ValidationError("target edge length must lie in (0, 1)");
    }
    const int nx = std::max(1, static_cast<int>(std::lround(1.0 / target_edge_length)));
    const int ny = std::max(1, static_cast<int>(std::lround(1.0 / (target_edge_length * std::sqrt(3.0) / 2.0))));

    std::vector<Vec2> nodes;
    std::vector<std::vector<int>> rows(static_cast<std::size_t>(ny) + 1);
    for (int j = 0; j <= ny; ++j) {
        const double y = static_cast<double>(j) / ny;
        auto& row = rows[static_cast<std::size_t>(j)];
        auto add = [&](double x) {
            row.push_back(static_cast<int>(nodes.size()));
            nodes.push_back({x, y});
        };
        if (j % 2 == 0) {
            for (int i = 0; i <= nx; ++i) add(static_cast<double>(i) / nx);
        } else {
            add(0.0);
            for (int i = 0; i < nx; ++i) add((i + 0.5) / nx);
            add(1.0);
        }
    }
    std::vector<Triangle> elements;
    for (int j = 0; j < ny; ++j) {
        detail::zip_rows(rows[static_cast<std::size_t>(j)], rows[static_cast<std::size_t>(j) + 1], nodes, elements);
    }
    Mesh mesh(std::move(nodes), std::move(elements));
    mesh.orient_ccw();
    return mesh;
}

/// Uniform n x n grid of squares, each split along the (i,j)-(i+1,j+1) diagonal. Spacing h = 1/n.
inline Mesh generate_structured_square_mesh(int n) {
    if (n < 1) throw ValidationError("structured mesh needs n >= 1");
    std::vector<Vec2> nodes;
    nodes.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            nodes.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<Triangle> elements;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return Mesh(std::move(nodes), std::move(elements));
}

/*
 * Displaces interior nodes by independent uniform offsets in
 * [-magnitude, magnitude]^2, visiting nodes in index order. A draw that would
 * invert an incident element is discarded; after 20 rejected draws for one
 * node the whole call fails. Boundary nodes and fields are left untouched.
 */
inline Mesh perturb_nodes(const Mesh& mesh, double magnitude, std::uint64_t seed) {
    if (!(magnitude >= 0.0)) throw ValidationError("perturbation magnitude must be >= 0");
    constexpr int max_draws = 20;
    std::mt19937_64 rng(seed);
    std::vector<Vec2> nodes = mesh.nodes();

    auto star_valid = [&](int node) {
        for (int e : mesh.incident_elements(node)) {
            const auto& t = mesh.element(e);
            if (signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) <= 0.0) return false;
        }
        return true;
    };

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (mesh.is_boundary(static_cast<int>(i))) continue;
        const Vec2 original = nodes[i];
        bool placed = false;
        for (int draw = 0; draw < max_draws && !placed; ++draw) {
            const double dx = magnitude * (2.0 * uniform01(rng) - 1.0);
            const double dy = magnitude * (2.0 * uniform01(rng) - 1.0);
            nodes[i] = original + Vec2{dx, dy};
            placed = star_valid(static_cast<int>(i));
        }
        if (!placed) {
            throw PerturbationError("node " + std::to_string(i) + ": no valid position after " +
                                    std::to_string(max_draws) + " draws at magnitude " +
                                    std::to_string(magnitude));
        }
    }
    return mesh.with_nodes(std::move(nodes));
}

} // namespace meshmove
