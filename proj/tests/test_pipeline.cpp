#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "meshmove/meshmove.hpp"

using namespace meshmove;
namespace fs = std::filesystem;

namespace {

Mesh with_field(Mesh m, const std::function<double(double, double)>& f) {
    std::vector<double> u(m.num_nodes());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = f(m.nodes()[i].x, m.nodes()[i].y);
    m.set_field("u", u);
    return m;
}

Mesh helmholtz_mesh(double h = 0.05) {
    return with_field(generate_unit_square_mesh(h), [](double, double y) { return std::cos(2 * std::numbers::pi * y); });
}

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "meshmove_pipeline_tests";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + MESHMOVE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

} // namespace

TEST(Adapt, SingleEpochIsOneMoverPass) {
    const Mesh m = helmholtz_mesh();
    AdaptConfig cfg;
    cfg.max_epochs = 1;
    const auto r = adapt(m, "u", cfg);
    const auto mon = build_monitor(m, "u");
    const Mesh once = direct_step(m, mon, cfg.direct);
    EXPECT_EQ(r.report.termination_epoch, 1);
    ASSERT_EQ(r.report.uniformity.size(), 1u);
    EXPECT_EQ(r.report.uniformity[0], global_uniformity(once, sample_monitor(mon, once)));
    if (r.report.best_epoch == 1) EXPECT_EQ(r.mesh.nodes(), once.nodes());
}

TEST(Adapt, ReturnsBestRecordedMesh) {
    for (const char* key : {"helmholtz:cos(2pi*y)", "poisson:sin(4pi*x)*sin(4pi*y)", "helmholtz:cos(2pi*y)*cos(4pi*x)"}) {
        const auto& p = find_problem(key);
        Mesh m = generate_unit_square_mesh(0.05);
        m.set_field("u", solve(p, m));
        const auto r = adapt(m, "u", {});
        const auto& u = r.report.uniformity;
        ASSERT_FALSE(u.empty());
        EXPECT_EQ(static_cast<int>(u.size()), r.report.termination_epoch);
        EXPECT_LE(r.report.termination_epoch, 10);
        EXPECT_EQ(r.report.final_uniformity(), std::min(r.report.initial_uniformity, *std::min_element(u.begin(), u.end())));
        EXPECT_LE(r.report.final_uniformity(), u[0]);
        const auto mon = build_monitor(m, "u");
        EXPECT_EQ(global_uniformity(r.mesh, sample_monitor(mon, r.mesh)), r.report.final_uniformity());
        EXPECT_EQ(r.report.tangling_ratio, 0.0);
        for (std::size_t i = 0; i < m.num_nodes(); ++i) {
            if (m.is_boundary(static_cast<int>(i))) EXPECT_EQ(r.mesh.nodes()[i], m.nodes()[i]);
        }
    }
}

TEST(Adapt, StopsWhenUniformityStopsDecreasing) {
    const Mesh m = helmholtz_mesh();
    const auto r = adapt(m, "u", {});
    const auto& u = r.report.uniformity;
    for (std::size_t e = 0; e + 1 < u.size(); ++e) {
        const double prev = e == 0 ? r.report.initial_uniformity : u[e - 1];
        EXPECT_LT(u[e], prev) << "loop kept going after a non-decrease at epoch " << e + 1;
    }
}

TEST(Adapt, ConstantFieldTerminatesEarly) {
    // A uniform grid is the fixed point of a constant monitor; an unstructured mesh still equalizes areas.
    const Mesh m = with_field(generate_structured_square_mesh(10), [](double, double) { return 2.5; });
    const auto r = adapt(m, "u", {});
    EXPECT_LE(r.report.termination_epoch, 2);
    double moved = 0.0;
    for (std::size_t i = 0; i < m.num_nodes(); ++i) moved = std::max(moved, norm(r.mesh.nodes()[i] - m.nodes()[i]));
    EXPECT_LT(moved, 0.1 * 0.25);
    EXPECT_EQ(r.report.tangling_ratio, 0.0);
}

TEST(Adapt, TangledCandidateRollsBackOrFails) {
    const Mesh m = helmholtz_mesh(0.1);
    const auto mon = build_monitor(m, "u");
    const int victim = m.interior_nodes().front();
    int calls = 0;
    const MoverFn tangler = [&](const Mesh& cur, const MonitorField& cm) {
        ++calls;
        if (calls == 1) return direct_step(cur, cm);
        auto nodes = cur.nodes();
        nodes[static_cast<std::size_t>(victim)] = {5.0, 5.0};
        return cur.with_nodes(nodes);
    };
    AdaptConfig cfg;
    const auto r = adapt_with(m, mon, cfg, tangler);
    EXPECT_TRUE(r.report.rolled_back);
    EXPECT_EQ(r.report.termination_epoch, 1);
    EXPECT_EQ(r.report.tangling_ratio, 0.0);
    EXPECT_TRUE(is_valid(r.mesh));

    calls = 0;
    cfg.rollback_on_tangle = false;
    EXPECT_THROW(adapt_with(m, mon, cfg, tangler), AdaptError);
}

TEST(Adapt, Deterministic) {
    const Mesh m = helmholtz_mesh();
    const auto a = adapt(m, "u", {});
    const auto b = adapt(m, "u", {});
    EXPECT_EQ(a.mesh, b.mesh);
    EXPECT_EQ(a.report.uniformity, b.report.uniformity);
    EXPECT_EQ(format_mesh_json(a.mesh), format_mesh_json(b.mesh));
}

TEST(Adapt, InputValidation) {
    const Mesh m = helmholtz_mesh(0.1);
    AdaptConfig cfg;
    cfg.mover = MoverKind::neural;
    EXPECT_THROW(adapt(m, "u", cfg), ValidationError);
    cfg = {};
    cfg.max_epochs = 0;
    EXPECT_THROW(adapt(m, "u", cfg), ValidationError);
    EXPECT_THROW(adapt(m, "missing", {}), ValidationError);
    EXPECT_THROW(parse_mover("sweep"), ValidationError);
}

TEST(Adapt, NoOpMoverKeepsMesh) {
    const Mesh m = helmholtz_mesh(0.1);
    AdaptConfig cfg;
    cfg.mover = MoverKind::none;
    const auto r = adapt(m, "u", cfg);
    EXPECT_EQ(r.mesh.nodes(), m.nodes());
    EXPECT_EQ(r.report.best_epoch, 0);
    EXPECT_EQ(r.report.termination_epoch, 1);
}

TEST(Corpus, TrainingFieldValues) {
    const auto& f = training_fields();
    ASSERT_EQ(f.size(), 4u);
    EXPECT_NEAR(f[1].u(0.5, 0.5), -5.0 / std::numbers::pi, 1e-14);
    EXPECT_NEAR(f[0].u(0.25, 0.25), 10.0, 1e-12);
    EXPECT_NEAR(f[3].u(0.0, 0.0), 0.0, 1e-14);
    EXPECT_NEAR(f[2].u(0.0, 0.0), 10.0 * std::cos(10.0), 1e-12);
}

TEST(Corpus, DeskCorpusIsDeterministicAndRoundTrips) {
    const auto a = generate_corpus(CorpusScale::desk, 7);
    const auto b = generate_corpus(CorpusScale::desk, 7);
    EXPECT_EQ(format_corpus(a), format_corpus(b));
    EXPECT_NE(format_corpus(a), format_corpus(generate_corpus(CorpusScale::desk, 8)));
    EXPECT_EQ(a.samples.size(), 12u);
    const auto c = parse_corpus(format_corpus(a));
    ASSERT_EQ(c.samples.size(), a.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(c.samples[i].name, a.samples[i].name);
        EXPECT_EQ(c.samples[i].mesh, a.samples[i].mesh);
    }
    EXPECT_EQ(format_corpus(c), format_corpus(a));
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.sample_monitor(i).density, a.samples[i].mesh.field("density"));
        EXPECT_TRUE(is_valid(a.samples[i].mesh));
    }
}

TEST(Corpus, FullScaleNodeCount) {
    const auto c = generate_corpus(CorpusScale::full, 0);
    EXPECT_NEAR(static_cast<double>(c.total_nodes()), 10440.0, 0.1 * 10440.0);
}

TEST(Table1, HelmholtzSuiteShape) {
    Table1Config cfg;
    cfg.edge_length = 0.1;
    const auto rows = run_table1(problem_suite("helmholtz"), cfg);
    ASSERT_EQ(rows.size(), 5u);
    const auto csv = format_table1_csv(rows);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, table1_csv_header);
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        EXPECT_EQ(count(line, ","), 8u) << line;
        EXPECT_EQ(line.rfind("helmholtz,", 0), 0u);
    }
    EXPECT_EQ(n, 5);
    for (const auto& r : rows) {
        EXPECT_EQ(r.tr, 0.0);
        EXPECT_TRUE(std::isfinite(r.er_percent));
    }
}

TEST(Table1, PoissonSuiteContainsOscillatoryCase) {
    bool found = false;
    for (const auto* p : problem_suite("poisson")) found |= p->solution == "sin(4pi*x)*sin(4pi*y)";
    EXPECT_TRUE(found);
}

TEST(Table1, NoOpMoverGivesZeroErrorReduction) {
    Table1Config cfg;
    cfg.edge_length = 0.1;
    cfg.adapt.mover = MoverKind::none;
    for (const auto& r : run_table1(problem_suite("all"), cfg)) {
        EXPECT_EQ(r.er_percent, 0.0) << r.solution;
        EXPECT_EQ(r.mover, "none");
    }
}

TEST(Table1, CsvQuotesFieldsWithCommas) {
    Table1Row r;
    r.problem = "poisson";
    r.solution = "f(x, y)";
    r.mover = "direct";
    EXPECT_NE(format_table1_csv({r}).find("\"f(x, y)\""), std::string::npos);
}

TEST(Svg, TwoTriangleSquareHasFiveEdges) {
    const Mesh m({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
    const auto svg = svg_document(m);
    EXPECT_EQ(count(svg, "<line "), 5u);
    EXPECT_EQ(count(svg, "class=\"inverted\""), 0u);
}

TEST(Svg, InvertedElementHighlighted) {
    const Mesh m = generate_structured_square_mesh(3);
    auto nodes = m.nodes();
    nodes[5] = {0.9, 0.9}; // drags one interior node across its neighbors
    const Mesh bad = m.with_nodes(nodes);
    std::size_t inverted = 0;
    for (std::size_t e = 0; e < bad.num_elements(); ++e) inverted += bad.element_area(static_cast<int>(e)) <= 0.0;
    ASSERT_GE(inverted, 1u);
    EXPECT_EQ(count(svg_document(bad), "class=\"inverted\""), inverted);

    const Mesh one({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1, 2}, {1, 2, 3}}); // second element clockwise
    EXPECT_EQ(count(svg_document(one), "class=\"inverted\""), 1u);
}

TEST(Svg, FieldColouring) {
    const Mesh m = helmholtz_mesh(0.2);
    const auto svg = svg_document(m, std::string("u"));
    EXPECT_EQ(count(svg, "<polygon points="), m.num_elements());
    EXPECT_THROW(svg_document(m, std::string("missing")), ValidationError);
}

TEST(Config, ParsesBlocksAndRejectsUnknownKeys) {
    const auto c = config_from_json(nlohmann::json::parse(R"({
        "monitor": {"alpha": 3.0, "variant": "gradient", "log_transform": true},
        "adapt": {"max_epochs": 4, "mover": "none", "direct": {"inner_iters": 7}},
        "train": {"learning_rate": 0.01, "hidden": 16, "layers": 1, "heads": 4, "seed": 9}
    })"));
    EXPECT_EQ(c.adapt.monitor.alpha, 3.0);
    EXPECT_EQ(c.adapt.monitor.variant, MonitorVariant::gradient);
    EXPECT_TRUE(c.adapt.monitor.log_transform);
    EXPECT_EQ(c.adapt.max_epochs, 4);
    EXPECT_EQ(c.adapt.mover, MoverKind::none);
    EXPECT_EQ(c.adapt.direct.inner_iters, 7);
    EXPECT_EQ(c.train.learning_rate, 0.01);
    EXPECT_EQ(c.train.seed, 9u);
    EXPECT_EQ(c.model, (nn::ModelShape{16, 1, 4}));

    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"adapt": {"epochs": 3}})")), ValidationError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"solver": {}})")), ValidationError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"adapt": {"max_epochs": "ten"}})")), ValidationError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"adapt": {"max_epochs": 0}})")), ValidationError);
}

TEST(Config, ParseErrorReportsLine) {
    const auto path = scratch_dir() / "bad_config.json";
    detail::write_text_file(path, "{\n  \"adapt\": {\n    \"max_epochs\": ,\n  }\n}\n");
    try {
        load_config(path);
        FAIL() << "expected a format error";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch_dir();
    const auto mesh = (dir / "cli_mesh.json").string();
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("gen-mesh --h 0.1 --problem \"helmholtz:cos(2pi*y)\" --out " + mesh), 0);
    EXPECT_EQ(run_cli("adapt --mesh " + mesh + " --out-mesh " + (dir / "cli_out.json").string()), 0);
    EXPECT_EQ(run_cli("adapt --mesh " + mesh + " --mover sweep --out-mesh " + (dir / "x.json").string()), 2);
    EXPECT_EQ(run_cli("adapt --mesh " + (dir / "nope.json").string() + " --out-mesh " + (dir / "x.json").string()), 2);
    EXPECT_EQ(run_cli("adapt --mesh " + mesh + " --mover neural --out-mesh " + (dir / "x.json").string()), 2);
    EXPECT_EQ(run_cli("solve --problem poisson:nope --mesh " + mesh + " --out-field " + (dir / "x.json").string()), 2);
    EXPECT_EQ(run_cli("table1 --suite burgers --out " + (dir / "x.csv").string()), 2);

    // A lone triangle cannot support the quadratic fit: numerical failure.
    const auto tiny = (dir / "cli_tiny.json").string();
    detail::write_text_file(tiny, R"({"nodes": [[0,0],[1,0],[0,1]], "elements": [[0,1,2]], "fields": {"u": [1,2,3]}})");
    EXPECT_EQ(run_cli("adapt --mesh " + tiny + " --out-mesh " + (dir / "x.json").string()), 3);
}

TEST(Cli, SolveEvalPlotAndAdaptOutputs) {
    const auto dir = scratch_dir();
    const auto mesh = (dir / "cli2_mesh.json").string();
    const auto solved = (dir / "cli2_solved.json").string();
    const auto adapted = (dir / "cli2_adapted.msh").string();
    const auto report = (dir / "cli2_report.json").string();
    const auto svg = (dir / "cli2.svg").string();
    ASSERT_EQ(run_cli("gen-mesh --h 0.1 --out " + mesh), 0);
    ASSERT_EQ(run_cli("solve --problem \"helmholtz:cos(2pi*x)\" --mesh " + mesh + " --out-field " + solved), 0);
    ASSERT_EQ(run_cli("adapt --mesh " + solved + " --out-mesh " + adapted + " --report " + report), 0);
    ASSERT_EQ(run_cli("eval --problem \"helmholtz:cos(2pi*x)\" --coarse " + mesh + " --adapted " + adapted), 0);
    ASSERT_EQ(run_cli("plot --mesh " + adapted + " --out " + svg), 0); // msh carries geometry only
    ASSERT_EQ(run_cli("plot --mesh " + solved + " --field u --out " + svg + ".u.svg"), 0);
    const auto rep = nlohmann::json::parse(detail::read_text_file(report));
    EXPECT_EQ(rep.at("tangling_ratio").get<double>(), 0.0);
    EXPECT_LE(rep.at("termination_epoch").get<int>(), 10);
    EXPECT_TRUE(is_valid(load_mesh(adapted)));
    EXPECT_NE(detail::read_text_file(svg).find("<svg"), std::string::npos);
}
