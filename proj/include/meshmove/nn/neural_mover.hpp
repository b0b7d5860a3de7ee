#pragma once

#include <vector>

#include "meshmove/mesh.hpp"
#include "meshmove/monitor.hpp"
#include "meshmove/nn/model.hpp"
#include "meshmove/nn/train.hpp"
#include "meshmove/patch.hpp"

namespace meshmove::nn {

/// One learned pass: every interior center replaced by the model's prediction, all from the same snapshot.
inline Mesh neural_step(const Mesh& mesh, const MonitorField& monitor, const DeformModel& model) {
    std::vector<Vec2> nodes = mesh.nodes();
    ForwardCache cache;
    for (int c : mesh.interior_nodes()) {
        const NodePatch patch = build_patch(mesh, c);
        const NormalizedPatch np = normalize_patch(patch, mesh);
        const Vec2 y = model.forward(make_patch_input(np, patch, monitor.density), cache);
        nodes[static_cast<std::size_t>(c)] = np.transform.invert(y);
    }
    return mesh.with_nodes(std::move(nodes));
}

} // namespace meshmove::nn
