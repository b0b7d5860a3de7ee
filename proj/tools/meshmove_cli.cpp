// meshmove command-line front end.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "meshmove/meshmove.hpp"

using namespace meshmove;

namespace {

constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

std::string history_json(const nn::TrainHistory& h) {
    nlohmann::json j;
    j["train_loss"] = h.train_loss;
    j["val_loss"] = h.val_loss;
    j["test_loss"] = h.test_loss;
    j["best_epoch"] = h.best_epoch;
    j["epochs_run"] = h.epochs_run;
    j["stopped_early"] = h.stopped_early;
    return j.dump(1) + "\n";
}

std::string report_json(const AdaptReport& r) {
    nlohmann::json j;
    j["initial_uniformity"] = r.initial_uniformity;
    j["uniformity"] = r.uniformity;
    j["termination_epoch"] = r.termination_epoch;
    j["best_epoch"] = r.best_epoch;
    j["final_uniformity"] = r.final_uniformity();
    j["tangling_ratio"] = r.tangling_ratio;
    j["rolled_back"] = r.rolled_back;
    j["epoch_ms"] = r.epoch_ms;
    return j.dump(1) + "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patch-local r-adaptive mesh movement"};
    app.require_subcommand(1);

    // gen-mesh
    double h = 0.04, perturb = 0.0;
    std::uint64_t mesh_seed = 0;
    std::string mesh_out, mesh_problem;
    auto* gen_mesh = app.add_subcommand("gen-mesh", "Uniform triangulation of the unit square");
    gen_mesh->set_help_flag("--help", "Print this help message and exit"); // frees --h
    gen_mesh->add_option("--h", h, "Target edge length")->check(CLI::Range(1e-3, 0.999));
    gen_mesh->add_option("--perturb", perturb, "Interior perturbation magnitude, as a fraction of h");
    gen_mesh->add_option("--seed", mesh_seed, "Perturbation seed");
    gen_mesh->add_option("--problem", mesh_problem, "Attach the exact solution of this problem as field 'u'");
    gen_mesh->add_option("--out", mesh_out, "Output mesh (.json or .msh)")->required();

    // gen-data
    std::string scale = "desk", corpus_out, data_config;
    std::uint64_t data_seed = 0;
    auto* gen_data = app.add_subcommand("gen-data", "Generate the training corpus");
    gen_data->add_option("--scale", scale, "desk or full")->check(CLI::IsMember({"desk", "full"}));
    gen_data->add_option("--seed", data_seed, "Perturbation seed");
    gen_data->add_option("--config", data_config, "Config file (monitor block)");
    gen_data->add_option("--out", corpus_out, "Output corpus file")->required();

    // train
    std::string corpus_in, train_config, model_out, history_out;
    auto* train_cmd = app.add_subcommand("train", "Train the deformation model on a corpus");
    train_cmd->add_option("--corpus", corpus_in, "Corpus file")->required();
    train_cmd->add_option("--config", train_config, "Config file (train block)");
    train_cmd->add_option("--out-model", model_out, "Output model file")->required();
    train_cmd->add_option("--history", history_out, "Write the loss history as JSON");

    // adapt
    std::string adapt_mesh, adapt_field = "u", adapt_mover, adapt_model, adapt_config, adapt_out, adapt_report;
    auto* adapt_cmd = app.add_subcommand("adapt", "Adapt a mesh to one of its fields");
    adapt_cmd->add_option("--mesh", adapt_mesh, "Input mesh")->required();
    adapt_cmd->add_option("--field", adapt_field, "Field name, or comma-separated components");
    adapt_cmd->add_option("--mover", adapt_mover, "direct, neural or none (overrides the config)");
    adapt_cmd->add_option("--model", adapt_model, "Model file (neural mover)");
    adapt_cmd->add_option("--config", adapt_config, "Config file (monitor and adapt blocks)");
    adapt_cmd->add_option("--out-mesh", adapt_out, "Output mesh")->required();
    adapt_cmd->add_option("--report", adapt_report, "Write the adaptation report as JSON");

    // solve
    std::string solve_problem, solve_mesh, solve_out;
    auto* solve_cmd = app.add_subcommand("solve", "P1 solve of a manufactured problem");
    solve_cmd->add_option("--problem", solve_problem, "Problem key, e.g. helmholtz:cos(2pi*y)")->required();
    solve_cmd->add_option("--mesh", solve_mesh, "Mesh file")->required();
    solve_cmd->add_option("--out-field", solve_out, "Output mesh carrying the solution as field 'u'")->required();

    // eval
    std::string eval_problem, eval_coarse, eval_adapted;
    auto* eval_cmd = app.add_subcommand("eval", "Error reduction of an adapted mesh");
    eval_cmd->add_option("--problem", eval_problem, "Problem key")->required();
    eval_cmd->add_option("--coarse", eval_coarse, "Initial mesh")->required();
    eval_cmd->add_option("--adapted", eval_adapted, "Adapted mesh")->required();

    // table1
    std::string suite = "helmholtz", table_mover = "direct", table_out, table_model, table_config;
    double table_h = 0.04;
    auto* table_cmd = app.add_subcommand("table1", "Benchmark suite: solve, adapt, re-solve");
    table_cmd->add_option("--suite", suite, "poisson, helmholtz or all")
        ->check(CLI::IsMember({"poisson", "helmholtz", "all"}));
    table_cmd->add_option("--mover", table_mover, "direct, neural or none");
    table_cmd->add_option("--model", table_model, "Model file (neural mover)");
    table_cmd->add_option("--config", table_config, "Config file (monitor and adapt blocks)");
    table_cmd->set_help_flag("--help", "Print this help message and exit");
    table_cmd->add_option("--h", table_h, "Edge length of the coarse mesh");
    table_cmd->add_option("--out", table_out, "Output CSV")->required();

    // plot
    std::string plot_mesh, plot_field, plot_out;
    auto* plot_cmd = app.add_subcommand("plot", "Render a mesh as SVG");
    plot_cmd->add_option("--mesh", plot_mesh, "Mesh file")->required();
    plot_cmd->add_option("--field", plot_field, "Colour elements by this field");
    plot_cmd->add_option("--out", plot_out, "Output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_validation;
    }

    try {
        if (*gen_mesh) {
            Mesh m = generate_unit_square_mesh(h);
            if (perturb > 0.0) m = perturb_nodes(m, perturb * h, mesh_seed);
            if (!mesh_problem.empty()) {
                const auto& p = find_problem(mesh_problem);
                std::vector<double> u(m.num_nodes());
                for (std::size_t i = 0; i < u.size(); ++i) u[i] = p.u(m.nodes()[i]);
                m.set_field("u", std::move(u));
            }
            save_mesh(m, mesh_out, guess_mesh_format(mesh_out));
            std::printf("nodes %zu elements %zu\n", m.num_nodes(), m.num_elements());
        } else if (*gen_data) {
            const auto cfg = config_or_default(data_config);
            const auto corpus = gen_training_corpus(corpus_out, parse_corpus_scale(scale), data_seed, cfg.adapt.monitor);
            std::printf("samples %zu nodes %zu\n", corpus.samples.size(), corpus.total_nodes());
        } else if (*train_cmd) {
            const auto cfg = config_or_default(train_config);
            const auto sets = nn::patch_sets_from_corpus(load_corpus(corpus_in));
            auto model = nn::DeformModel::initialized(cfg.model, cfg.init_seed);
            const auto hist = nn::train(model, sets, cfg.train);
            nn::save_model(model, model_out);
            if (!history_out.empty()) detail::write_text_file(history_out, history_json(hist));
            std::printf("epochs %d best %d train_loss %.6e -> %.6e test_loss %.6e\n", hist.epochs_run,
                        hist.best_epoch, hist.train_loss.front(), hist.train_loss[hist.best_epoch], hist.test_loss);
        } else if (*adapt_cmd) {
            auto cfg = config_or_default(adapt_config);
            if (!adapt_mover.empty()) cfg.adapt.mover = parse_mover(adapt_mover);
            std::optional<nn::DeformModel> model;
            if (!adapt_model.empty()) model = nn::load_model(adapt_model);
            const Mesh mesh = load_mesh(adapt_mesh);
            const auto result = adapt(mesh, adapt_field, cfg.adapt, model ? &*model : nullptr);
            save_mesh(result.mesh, adapt_out, guess_mesh_format(adapt_out));
            if (!adapt_report.empty()) detail::write_text_file(adapt_report, report_json(result.report));
            std::printf("epochs %d best %d uniformity %.6e -> %.6e TR %g\n", result.report.termination_epoch,
                        result.report.best_epoch, result.report.initial_uniformity,
                        result.report.final_uniformity(), result.report.tangling_ratio);
        } else if (*solve_cmd) {
            const auto& p = find_problem(solve_problem);
            Mesh mesh = load_mesh(solve_mesh);
            mesh.set_field("u", solve(p, mesh));
            save_mesh(mesh, solve_out, guess_mesh_format(solve_out));
            std::printf("l2_error %.10e\n", l2_error(mesh, mesh.field("u"), p.exact));
        } else if (*eval_cmd) {
            const auto& p = find_problem(eval_problem);
            const Mesh coarse = load_mesh(eval_coarse);
            const Mesh adapted = load_mesh(eval_adapted);
            const double ec = solution_error(p, coarse);
            const double ea = solution_error(p, adapted);
            std::printf("E_coarse %.10e E_adapted %.10e ER_percent %.4f TR %g\n", ec, ea,
                        error_reduction_percent(ec, ea), tangling_ratio(adapted));
        } else if (*table_cmd) {
            const auto cfg = config_or_default(table_config);
            Table1Config tc;
            tc.edge_length = table_h;
            tc.adapt = cfg.adapt;
            tc.adapt.mover = parse_mover(table_mover);
            std::optional<nn::DeformModel> model;
            if (!table_model.empty()) model = nn::load_model(table_model);
            const auto rows = run_table1(problem_suite(suite), tc, model ? &*model : nullptr);
            const auto csv = format_table1_csv(rows);
            detail::write_text_file(table_out, csv);
            std::fputs(csv.c_str(), stdout);
        } else if (*plot_cmd) {
            const Mesh mesh = load_mesh(plot_mesh);
            render_svg(mesh, plot_field.empty() ? std::nullopt : std::optional<std::string>(plot_field), plot_out);
        }
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
    return 0;
}
