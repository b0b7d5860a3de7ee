#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"
#include "meshmove/monitor.hpp"
#include "meshmove/muniform.hpp"
#include "meshmove/patch.hpp"

namespace meshmove {

struct DirectMoveConfig {
    double step_size = 0.2;
    int inner_iters = 5; // per adaptation epoch
    double max_step_fraction = 0.25; // of the shortest incident edge

    void validate() const {
        if (!(step_size > 0.0)) throw ValidationError("direct mover: step_size must be > 0");
        if (inner_iters < 1) throw ValidationError("direct mover: inner_iters must be >= 1");
        if (!(max_step_fraction > 0.0 && max_step_fraction <= 1.0)) {
            throw ValidationError("direct mover: max_step_fraction must lie in (0, 1]");
        }
    }
};

/// d(patch variance)/d(center), evaluated with the center at `at` (its current position by default).
inline Vec2 patch_variance_gradient(const Mesh& mesh, const MonitorField& monitor, const NodePatch& patch,
                                    std::optional<Vec2> at = std::nullopt) {
    return evaluate_patch_variance(mesh, monitor, patch, at.value_or(mesh.node(patch.center))).gradient;
}

namespace detail {

// Reverts moved nodes touching inverted elements until the mesh is valid again.
inline void rollback_inverted(const Mesh& topology, const std::vector<Vec2>& before, std::vector<Vec2>& after) {
    for (;;) {
        bool changed = false;
        for (std::size_t e = 0; e < topology.num_elements(); ++e) {
            const auto& t = topology.elements()[e];
            if (signed_area(after[t[0]], after[t[1]], after[t[2]]) > 0.0) continue;
            for (int v : t) {
                if (!(after[v] == before[v])) {
                    after[v] = before[v];
                    changed = true;
                }
            }
        }
        if (!changed) return;
    }
}

} // namespace detail

/*
 * Moves every interior node along the negative gradient of its own patch
 * variance, inner_iters times. Per iteration all gradients come from the
 * same snapshot and are applied together. The step length is step_size times
 * the Gauss-Newton minimizer along -g, capped at max_step_fraction of the
 * node's shortest incident edge. Nodes whose move inverts an element keep
 * their previous position.
 */
inline Mesh direct_step(const Mesh& mesh, const MonitorField& monitor, const DirectMoveConfig& config = {}) {
    config.validate();
    const auto patches = build_interior_patches(mesh);
    std::vector<Vec2> nodes = mesh.nodes();
    std::vector<int> hints(mesh.num_nodes(), -1);
    std::vector<Vec2> next;

    for (int iter = 0; iter < config.inner_iters; ++iter) {
        const Mesh current = mesh.with_nodes(nodes);
        const MonitorField sampled = sample_monitor(monitor, current, &hints);
        next = nodes;
        for (const auto& patch : patches) {
            const int c = patch.center;
            const auto eval = evaluate_patch_variance(current, sampled, patch, nodes[c], &hints[c]);
            const Vec2 g = eval.gradient;
            const double gg = dot(g, g);
            if (!(gg > 0.0)) continue;
            const double gHg = g.x * (eval.curvature[0][0] * g.x + eval.curvature[0][1] * g.y) +
                               g.y * (eval.curvature[1][0] * g.x + eval.curvature[1][1] * g.y);
            if (!(gHg > 0.0)) continue;
            Vec2 d = g * (-config.step_size * gg / gHg);
            const double cap = config.max_step_fraction * shortest_incident_edge(current, c);
            const double len = norm(d);
            if (len > cap) d *= cap / len;
            next[c] = nodes[c] + d;
        }
        detail::rollback_inverted(mesh, nodes, next);
        nodes.swap(next);
    }
    return mesh.with_nodes(std::move(nodes));
}

} // namespace meshmove
