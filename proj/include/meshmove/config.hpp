#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "meshmove/adapt.hpp"
#include "meshmove/errors.hpp"
#include "meshmove/mesh_io.hpp"
#include "meshmove/monitor.hpp"
#include "meshmove/nn/model.hpp"
#include "meshmove/nn/train.hpp"

namespace meshmove {

/*
 * Run configuration file:
 *   {"monitor": {"alpha", "variant", "log_transform"},
 *    "adapt":   {"max_epochs", "mover", "rollback_on_tangle",
 *                "direct": {"step_size", "inner_iters", "max_step_fraction"}},
 *    "train":   {"learning_rate", "batch_size", "max_epochs", "lambda", "seed",
 *                "patience", "hidden", "layers", "heads", "init_seed"}}
 * Every block and key is optional; unknown keys are rejected.
 */
struct RunConfig {
    AdaptConfig adapt;
    nn::TrainConfig train;
    nn::ModelShape model;
    std::uint64_t init_seed = 0;
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& block, std::set<std::string> allowed) {
    if (!obj.is_object()) throw ValidationError("config: '" + block + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ValidationError("config: unknown key '" + key + "' in '" + block + "'");
    }
}

template <class T>
void read_opt(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

} // namespace detail

inline RunConfig config_from_json(const nlohmann::json& doc) {
    RunConfig c;
    try {
        detail::check_keys(doc, "<root>", {"monitor", "adapt", "train"});
        if (doc.contains("monitor")) {
            const auto& m = doc.at("monitor");
            detail::check_keys(m, "monitor", {"alpha", "variant", "log_transform"});
            detail::read_opt(m, "alpha", c.adapt.monitor.alpha);
            if (m.contains("variant")) c.adapt.monitor.variant = parse_monitor_variant(m.at("variant").get<std::string>());
            detail::read_opt(m, "log_transform", c.adapt.monitor.log_transform);
        }
        if (doc.contains("adapt")) {
            const auto& a = doc.at("adapt");
            detail::check_keys(a, "adapt", {"max_epochs", "mover", "rollback_on_tangle", "direct"});
            detail::read_opt(a, "max_epochs", c.adapt.max_epochs);
            if (a.contains("mover")) c.adapt.mover = parse_mover(a.at("mover").get<std::string>());
            detail::read_opt(a, "rollback_on_tangle", c.adapt.rollback_on_tangle);
            if (a.contains("direct")) {
                const auto& d = a.at("direct");
                detail::check_keys(d, "adapt.direct", {"step_size", "inner_iters", "max_step_fraction"});
                detail::read_opt(d, "step_size", c.adapt.direct.step_size);
                detail::read_opt(d, "inner_iters", c.adapt.direct.inner_iters);
                detail::read_opt(d, "max_step_fraction", c.adapt.direct.max_step_fraction);
            }
        }
        if (doc.contains("train")) {
            const auto& t = doc.at("train");
            detail::check_keys(t, "train", {"learning_rate", "batch_size", "max_epochs", "lambda", "seed", "patience",
                                            "hidden", "layers", "heads", "init_seed"});
            detail::read_opt(t, "learning_rate", c.train.learning_rate);
            detail::read_opt(t, "batch_size", c.train.batch_size);
            detail::read_opt(t, "max_epochs", c.train.max_epochs);
            detail::read_opt(t, "lambda", c.train.lambda);
            detail::read_opt(t, "seed", c.train.seed);
            detail::read_opt(t, "patience", c.train.patience);
            detail::read_opt(t, "hidden", c.model.hidden);
            detail::read_opt(t, "layers", c.model.layers);
            detail::read_opt(t, "heads", c.model.heads);
            detail::read_opt(t, "init_seed", c.init_seed);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.adapt.validate();
    c.train.validate();
    c.model.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path);
    try {
        return config_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        // byte is 1-based and points just past the offending character.
        throw FormatError(std::string("config: ") + e.what(), detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
    }
}

} // namespace meshmove
