#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "meshmove/adapt.hpp"
#include "meshmove/fem.hpp"
#include "meshmove/mesh_gen.hpp"
#include "meshmove/mesh_io.hpp"

namespace meshmove {

struct Table1Row {
    std::string problem; // poisson | helmholtz
    std::string solution;
    std::string mover;
    double er_percent = 0.0;
    double tr = 0.0;
    int epochs = 0;
    double uniformity_initial = 0.0;
    double uniformity_final = 0.0;
    double wall_ms = 0.0;
};

struct Table1Config {
    double edge_length = 0.04;
    AdaptConfig adapt;
};

/*
 * Per problem: P1 solution on the uniform coarse mesh, adaptation driven by
 * that solution, then a fresh solve on the adapted mesh. ER compares both
 * L2 errors against the exact solution.
 */
inline Table1Row run_problem(const PDEProblem& problem, const Mesh& coarse, const AdaptConfig& config,
                             const nn::DeformModel* model = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    Mesh input = coarse;
    input.set_field("u", solve(problem, coarse));
    const AdaptResult result = adapt(input, "u", config, model);
    Table1Row row;
    row.problem = to_string(problem.kind);
    row.solution = problem.solution;
    row.mover = to_string(config.mover);
    row.er_percent = error_reduction(problem, coarse, result.mesh);
    row.tr = result.report.tangling_ratio;
    row.epochs = result.report.termination_epoch;
    row.uniformity_initial = result.report.initial_uniformity;
    row.uniformity_final = result.report.final_uniformity();
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

inline std::vector<Table1Row> run_table1(const std::vector<const PDEProblem*>& problems, const Table1Config& config,
                                         const nn::DeformModel* model = nullptr) {
    const Mesh coarse = generate_unit_square_mesh(config.edge_length);
    std::vector<Table1Row> rows;
    for (const auto* p : problems) rows.push_back(run_problem(*p, coarse, config.adapt, model));
    return rows;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace detail

inline const char* table1_csv_header = "problem,solution,mover,ER_percent,TR,epochs,uniformity_initial,uniformity_final,wall_ms";

inline std::string format_table1_csv(const std::vector<Table1Row>& rows) {
    std::string out = std::string(table1_csv_header) + "\n";
    for (const auto& r : rows) {
        out += detail::csv_field(r.problem) + "," + detail::csv_field(r.solution) + "," + detail::csv_field(r.mover) +
               "," + detail::csv_number(r.er_percent) + "," + detail::csv_number(r.tr) + "," +
               std::to_string(r.epochs) + "," + detail::csv_number(r.uniformity_initial) + "," +
               detail::csv_number(r.uniformity_final) + "," + detail::csv_number(r.wall_ms) + "\n";
    }
    return out;
}

inline std::vector<Table1Row> run_table1(const std::string& suite, MoverKind mover, const std::filesystem::path& out,
                                         const nn::DeformModel* model = nullptr) {
    Table1Config config;
    config.adapt.mover = mover;
    auto rows = run_table1(problem_suite(suite), config, model);
    detail::write_text_file(out, format_table1_csv(rows));
    return rows;
}

} // namespace meshmove
