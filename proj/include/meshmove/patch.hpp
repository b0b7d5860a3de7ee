#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <utility>
#include <vector>

#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"

namespace meshmove {

/// Per-axis affine map x' = (x - offset) / scale into the unit square.
struct PatchTransform {
    Vec2 offset{0.0, 0.0};
    Vec2 scale{1.0, 1.0};

    Vec2 apply(const Vec2& p) const { return {(p.x - offset.x) / scale.x, (p.y - offset.y) / scale.y}; }
    Vec2 invert(const Vec2& q) const { return {offset.x + q.x * scale.x, offset.y + q.y * scale.y}; }
};

/*
 * A center node with its first-order neighbors. Only center-neighbor edges
 * belong to the patch; neighbor-neighbor connections are dropped.
 */
struct NodePatch {
    int center = -1;
    std::vector<int> neighbors;                 // ascending node index
    std::vector<std::pair<int, int>> star_edges; // (center, neighbor), same order as neighbors
    std::vector<int> incident_elements;         // ascending element index
};

/// Patch coordinates in [0,1]^2: center first, then neighbors in patch order.
struct NormalizedPatch {
    std::vector<Vec2> coords;
    PatchTransform transform;

    const Vec2& center() const { return coords.front(); }
};

inline NodePatch build_patch(const Mesh& mesh, int node) {
    if (node < 0 || static_cast<std::size_t>(node) >= mesh.num_nodes()) {
        throw TopologyError("node " + std::to_string(node) + " is out of range");
    }
    const auto incident = mesh.incident_elements(node);
    if (incident.empty()) {
        throw TopologyError("node " + std::to_string(node) + " has no incident elements");
    }
    NodePatch patch;
    patch.center = node;
    patch.incident_elements.assign(incident.begin(), incident.end());
    for (int e : incident) {
        for (int v : mesh.element(e)) {
            if (v != node) patch.neighbors.push_back(v);
        }
    }
    std::sort(patch.neighbors.begin(), patch.neighbors.end());
    patch.neighbors.erase(std::unique(patch.neighbors.begin(), patch.neighbors.end()), patch.neighbors.end());
    patch.star_edges.reserve(patch.neighbors.size());
    for (int v : patch.neighbors) patch.star_edges.emplace_back(node, v);
    return patch;
}

inline std::vector<NodePatch> build_interior_patches(const Mesh& mesh) {
    std::vector<NodePatch> patches;
    for (int i : mesh.interior_nodes()) patches.push_back(build_patch(mesh, i));
    return patches;
}

/*
 * Min-max normalization over the patch nodes. An axis with zero extent maps
 * every coordinate to 0.5 under a unit scale, so the inverse map still
 * restores the shared value.
 */
inline NormalizedPatch normalize_patch(const NodePatch& patch, const Mesh& mesh) {
    std::vector<Vec2> pts;
    pts.reserve(patch.neighbors.size() + 1);
    pts.push_back(mesh.node(patch.center));
    for (int v : patch.neighbors) pts.push_back(mesh.node(v));

    Vec2 lo = pts.front(), hi = pts.front();
    for (const auto& p : pts) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    PatchTransform tf;
    auto fit_axis = [](double min, double max, double& offset, double& scale) {
        if (max > min) {
            offset = min;
            scale = max - min;
        } else {
            offset = min - 0.5;
            scale = 1.0;
        }
    };
    fit_axis(lo.x, hi.x, tf.offset.x, tf.scale.x);
    fit_axis(lo.y, hi.y, tf.offset.y, tf.scale.y);

    NormalizedPatch out;
    out.transform = tf;
    out.coords.reserve(pts.size());
    for (const auto& p : pts) {
        Vec2 q = tf.apply(p);
        // The extremes must land exactly on 0 and 1.
        if (p.x == lo.x && hi.x > lo.x) q.x = 0.0;
        if (p.x == hi.x && hi.x > lo.x) q.x = 1.0;
        if (p.y == lo.y && hi.y > lo.y) q.y = 0.0;
        if (p.y == hi.y && hi.y > lo.y) q.y = 1.0;
        out.coords.push_back(q);
    }
    return out;
}

inline Vec2 denormalize_center(const NormalizedPatch& patch, const Vec2& predicted) {
    return patch.transform.invert(predicted);
}

} // namespace meshmove
