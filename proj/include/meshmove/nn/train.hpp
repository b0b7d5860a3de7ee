#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "meshmove/corpus.hpp"
#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"
#include "meshmove/mesh_gen.hpp"
#include "meshmove/monitor.hpp"
#include "meshmove/muniform.hpp"
#include "meshmove/nn/model.hpp"
#include "meshmove/nn/optim.hpp"
#include "meshmove/patch.hpp"

namespace meshmove::nn {

inline PatchInput make_patch_input(const NormalizedPatch& normalized, const NodePatch& patch,
                                   std::span<const double> density) {
    PatchInput in;
    in.coords = normalized.coords;
    in.density.reserve(patch.neighbors.size() + 1);
    in.density.push_back(density[static_cast<std::size_t>(patch.center)]);
    for (int v : patch.neighbors) in.density.push_back(density[static_cast<std::size_t>(v)]);
    return in;
}

/// A mesh, its frozen monitor and its interior patches, ready for loss evaluation.
struct PatchSet {
    Mesh mesh;
    MonitorField monitor;
    std::vector<NodePatch> patches;
    std::vector<NormalizedPatch> normalized;
    std::vector<PatchInput> inputs;
    std::vector<int> start_triangle; // point-location seed per patch

    PatchSet(Mesh m, MonitorField mon) : mesh(std::move(m)), monitor(std::move(mon)) {
        patches = build_interior_patches(mesh);
        const auto& tri = monitor.density_function().triangulation();
        for (const auto& p : patches) {
            normalized.push_back(normalize_patch(p, mesh));
            inputs.push_back(make_patch_input(normalized.back(), p, monitor.density));
            start_triangle.push_back(locate(tri, mesh.node(p.center)));
        }
    }
};

struct PatchRef {
    int set = 0;
    int patch = 0;
    bool operator==(const PatchRef&) const = default;
};

/*
 * lambda times the mean patch variance over `batch`, each patch center placed
 * at the model's denormalized prediction. `grad` (if non-empty) receives the
 * parameter gradient, overwritten. Patches are visited in batch order.
 */
inline double loss_and_gradient(const DeformModel& model, std::span<const PatchRef> batch,
                                std::span<const PatchSet> sets, double lambda, std::span<double> grad) {
    if (batch.empty()) throw ValidationError("loss_and_gradient: empty batch");
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    const double w = lambda / static_cast<double>(batch.size());
    double loss = 0.0;
    ForwardCache cache;
    for (const auto& ref : batch) {
        const PatchSet& s = sets[static_cast<std::size_t>(ref.set)];
        const auto k = static_cast<std::size_t>(ref.patch);
        const Vec2 y = model.forward(s.inputs[k], cache);
        const auto& tf = s.normalized[k].transform;
        int hint = s.start_triangle[k];
        const auto eval = evaluate_patch_variance(s.mesh, s.monitor, s.patches[k], tf.invert(y), &hint);
        loss += w * eval.variance;
        if (!grad.empty()) {
            model.backward(cache, {w * eval.gradient.x * tf.scale.x, w * eval.gradient.y * tf.scale.y}, grad);
        }
    }
    return loss;
}

/// Single-mesh form: every interior patch of `set`.
inline double loss_and_gradient(const DeformModel& model, const PatchSet& set, double lambda,
                                std::span<double> grad) {
    std::vector<PatchRef> batch;
    for (std::size_t k = 0; k < set.patches.size(); ++k) batch.push_back({0, static_cast<int>(k)});
    return loss_and_gradient(model, batch, std::span<const PatchSet>(&set, 1), lambda, grad);
}

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 200;
    double lambda = default_loss_scale;
    std::uint64_t seed = 0;
    int patience = 20;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ValidationError("train: learning_rate must be > 0");
        if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
        if (max_epochs < 1) throw ValidationError("train: max_epochs must be >= 1");
        if (!(lambda > 0.0)) throw ValidationError("train: lambda must be > 0");
        if (patience < 1) throw ValidationError("train: patience must be >= 1");
    }
};

struct DataSplit {
    std::vector<PatchRef> train, val, test;
};

/// Seeded Fisher-Yates shuffle driven by uniform01, so the order is the same on every platform.
template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)), i - 1);
        std::swap(v[i - 1], v[j]);
    }
}

/// Patch-level 8:1:1 split after a seeded shuffle.
inline DataSplit split_dataset(std::span<const PatchSet> sets, std::uint64_t seed) {
    std::vector<PatchRef> all;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        for (std::size_t k = 0; k < sets[s].patches.size(); ++k) all.push_back({static_cast<int>(s), static_cast<int>(k)});
    }
    if (all.size() < 10) throw ValidationError("train: need at least 10 patches for an 8:1:1 split");
    std::mt19937_64 rng(seed);
    seeded_shuffle(all, rng);
    const std::size_t n_val = all.size() / 10;
    const std::size_t n_test = all.size() / 10;
    const std::size_t n_train = all.size() - n_val - n_test;
    DataSplit split;
    split.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train),
                     all.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), all.end());
    return split;
}

inline std::vector<PatchSet> patch_sets_from_corpus(const Corpus& corpus) {
    std::vector<PatchSet> sets;
    sets.reserve(corpus.samples.size());
    for (std::size_t i = 0; i < corpus.samples.size(); ++i) sets.emplace_back(corpus.samples[i].mesh, corpus.sample_monitor(i));
    return sets;
}

struct TrainHistory {
    std::vector<double> train_loss; // [0] before the first update, then one entry per epoch
    std::vector<double> val_loss;   // same indexing
    double test_loss = 0.0;         // of the returned parameters
    int best_epoch = 0;             // epoch whose parameters were kept
    int epochs_run = 0;
    bool stopped_early = false;
};

/*
 * Mini-batch training. Every epoch reshuffles the training patches with the
 * seeded generator, then records the full training and validation losses.
 * The parameters with the lowest validation loss are kept; training stops
 * after `patience` epochs without improvement.
 */
inline TrainHistory train(DeformModel& model, std::span<const PatchSet> sets, const TrainConfig& config) {
    config.validate();
    const DataSplit split = split_dataset(sets, config.seed);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
    NAdam optimizer(model.num_params(), config.learning_rate);
    std::vector<double> grad(model.num_params());
    TrainHistory hist;

    auto full_loss = [&](const std::vector<PatchRef>& refs) {
        return loss_and_gradient(model, refs, sets, config.lambda, {});
    };
    auto check = [](double v, int epoch, const char* what) {
        if (!std::isfinite(v)) {
            throw NumericalError(std::string("train: ") + what + " loss became non-finite at epoch " +
                                 std::to_string(epoch));
        }
    };

    hist.train_loss.push_back(full_loss(split.train));
    hist.val_loss.push_back(full_loss(split.val));
    check(hist.train_loss.back(), 0, "training");
    std::vector<double> best_params = model.params();
    double best_val = hist.val_loss.back();
    int since_best = 0;

    std::vector<PatchRef> order = split.train;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        seeded_shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::span<const PatchRef> mb(order.data() + start, std::min(batch, order.size() - start));
            const double l = loss_and_gradient(model, mb, sets, config.lambda, grad);
            check(l, epoch, "batch");
            optimizer.step(model.params(), grad);
        }
        hist.train_loss.push_back(full_loss(split.train));
        hist.val_loss.push_back(full_loss(split.val));
        check(hist.train_loss.back(), epoch, "training");
        check(hist.val_loss.back(), epoch, "validation");
        hist.epochs_run = epoch;
        if (hist.val_loss.back() < best_val) {
            best_val = hist.val_loss.back();
            best_params = model.params();
            hist.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            hist.stopped_early = true;
            break;
        }
    }
    model.params() = best_params;
    hist.test_loss = split.test.empty() ? 0.0 : full_loss(split.test);
    return hist;
}

} // namespace meshmove::nn
