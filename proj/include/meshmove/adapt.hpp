#pragma once

#include <chrono>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "meshmove/direct_mover.hpp"
#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"
#include "meshmove/monitor.hpp"
#include "meshmove/muniform.hpp"
#include "meshmove/nn/model.hpp"
#include "meshmove/nn/neural_mover.hpp"

namespace meshmove {

enum class MoverKind { direct, neural, none };

inline MoverKind parse_mover(const std::string& s) {
    if (s == "direct") return MoverKind::direct;
    if (s == "neural") return MoverKind::neural;
    if (s == "none") return MoverKind::none;
    throw ValidationError("unknown mover '" + s + "' (expected direct, neural or none)");
}

inline const char* to_string(MoverKind m) {
    switch (m) {
    case MoverKind::direct: return "direct";
    case MoverKind::neural: return "neural";
    default: return "none";
    }
}

struct AdaptConfig {
    int max_epochs = 10;
    MoverKind mover = MoverKind::direct;
    MonitorConfig monitor;
    DirectMoveConfig direct;
    bool rollback_on_tangle = true;

    void validate() const {
        if (max_epochs < 1) throw ValidationError("adapt: max_epochs must be >= 1");
        if (!(monitor.alpha > 0.0)) throw ValidationError("adapt: monitor alpha must be > 0");
        direct.validate();
    }
};

struct AdaptReport {
    double initial_uniformity = 0.0;
    std::vector<double> uniformity; // one entry per epoch run
    std::vector<double> epoch_ms;
    int termination_epoch = 0;
    int best_epoch = 0; // 0 = the input mesh was returned
    double tangling_ratio = 0.0;
    bool rolled_back = false;

    double final_uniformity() const { return best_epoch == 0 ? initial_uniformity : uniformity[best_epoch - 1]; }
};

struct AdaptResult {
    Mesh mesh;
    AdaptReport report;
};

/// One mover pass: adapted node positions for every interior node, boundary fixed.
using MoverFn = std::function<Mesh(const Mesh& current, const MonitorField& monitor)>;

/*
 * Iterative adaptation. The monitor is built once on the input mesh; every
 * later epoch evaluates that same density at the moved nodes. The loop stops
 * as soon as the global uniformity fails to decrease, or after max_epochs, and
 * returns the epoch mesh with the smallest uniformity.
 */
inline AdaptResult adapt_with(const Mesh& mesh, const MonitorField& monitor, const AdaptConfig& config,
                              const MoverFn& mover) {
    config.validate();
    if (!is_valid(mesh)) throw ValidationError("adapt: input mesh has inverted elements");
    AdaptResult out{mesh, {}};
    AdaptReport& rep = out.report;
    const MonitorField initial = sample_monitor(monitor, mesh);
    rep.initial_uniformity = global_uniformity(mesh, initial);

    Mesh current = mesh;
    MonitorField current_monitor = initial;
    double previous = rep.initial_uniformity;
    double best = rep.initial_uniformity; // epoch 0 competes too
    std::vector<int> hints;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Mesh candidate = mover(current, current_monitor);
        if (tangling_ratio(candidate) > 0.0) {
            if (!config.rollback_on_tangle) {
                throw AdaptError("adapt: epoch " + std::to_string(epoch) + " produced a tangled mesh");
            }
            rep.rolled_back = true;
            break;
        }
        MonitorField sampled = sample_monitor(monitor, candidate, &hints);
        const double u = global_uniformity(candidate, sampled);
        rep.uniformity.push_back(u);
        rep.epoch_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        rep.termination_epoch = epoch;
        if (u < best) {
            best = u;
            rep.best_epoch = epoch;
            out.mesh = candidate;
        }
        if (u >= previous * (1.0 - 1e-12)) break;
        previous = u;
        current = std::move(candidate);
        current_monitor = std::move(sampled);
    }
    rep.tangling_ratio = tangling_ratio(out.mesh);
    return out;
}

/// Runs the configured mover; `model` is required for the neural mover and ignored otherwise.
inline AdaptResult adapt(const Mesh& mesh, const std::string& field, const AdaptConfig& config,
                         const nn::DeformModel* model = nullptr) {
    config.validate();
    if (config.mover == MoverKind::neural && !model) throw ValidationError("adapt: the neural mover needs a model");
    const MonitorField monitor = build_monitor(mesh, field, config.monitor);
    switch (config.mover) {
    case MoverKind::none:
        return adapt_with(mesh, monitor, config, [](const Mesh& m, const MonitorField&) { return m; });
    case MoverKind::neural:
        return adapt_with(mesh, monitor, config, [&](const Mesh& m, const MonitorField& mon) {
            return nn::neural_step(m, mon, *model);
        });
    default:
        return adapt_with(mesh, monitor, config, [&](const Mesh& m, const MonitorField& mon) {
            return direct_step(m, mon, config.direct);
        });
    }
}

} // namespace meshmove
