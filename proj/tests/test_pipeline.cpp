#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ensel/model_io.hpp"
#include "ensel/pipeline.hpp"
#include "ensel/random.hpp"
#include "ensel/synth.hpp"

using namespace ensel;
namespace fs = std::filesystem;

namespace {

Dataset synth_ds(std::size_t n, double separation, std::uint64_t seed) {
    SynthSpec spec;
    spec.n_students = n;
    spec.separation = separation;
    spec.seed = seed;
    return generate(spec);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("end to end on well separated data") {
    const auto ds = synth_ds(200, 4.0, 7);
    RunConfig config;
    config.seed = 7;
    config.taus = {0.35};
    const auto report = run_pipeline(config, ds);

    REQUIRE(report.table.rows.size() == 63);
    REQUIRE(report.splits.size() == 6);
    CHECK(report.decision.chosen.p.value <= 0.05);
    double best_single = -2.0;
    for (const auto& row : report.table.rows) {
        if (std::count(row.members.begin(), row.members.end(), true) == 1) best_single = std::max(best_single, row.avg);
    }
    CHECK(report.decision.chosen.avg >= best_single);
    REQUIRE(report.metrics.size() == 1);
    CHECK(report.metrics.front().tau == 0.35);
    CHECK(report.pca_explained_pct.size() == 9);

    for (const auto& split : report.splits) {
        CHECK(split.models.size() == 6);
        CHECK(split.cap.front().fraction_of_students == 0.0);
        CHECK(split.cap.back().fraction_of_weak == 1.0);
    }

    const auto json = report_json(report);
    CHECK(report_json(parse_report(json)) == json);
    CHECK(render_text(parse_report(json)) == render_text(report));

    const fs::path dir = fs::temp_directory_path() / "ensel_pipeline_test";
    fs::remove_all(dir);
    write_report(report, dir);
    const auto table = slurp(dir / "selection_table.csv");
    CHECK(table.substr(0, table.find('\n')) == "rf,mlp,bn,knn,lreg,svm,G,G1,G2,G3,G4,G5,Avg,p");
    const auto cap = slurp(dir / "cap_split0.csv");
    CHECK(cap.find("\n0,0\n") != std::string::npos);
    CHECK(cap.substr(cap.size() - 4) == "1,1\n");
    CHECK(fs::exists(dir / "report.txt"));
    fs::remove_all(dir);
}

TEST_CASE("reports do not depend on thread count") {
    const auto ds = synth_ds(90, 2.0, 3);
    RunConfig config;
    config.seed = 3;
    config.null_samples = 2000;
    config.tau_sweep = true;
    const auto a = run_pipeline(config, ds);
    config.threads = 3;
    auto b = run_pipeline(config, ds);
    CHECK(table_csv(a.table) == table_csv(b.table));
    b.config.threads = 1;
    CHECK(report_json(a) == report_json(b));
    CHECK(a.metrics.size() == 19);
}

TEST_CASE("empty tau list is noted") {
    const auto ds = synth_ds(60, 3.0, 1);
    RunConfig config;
    config.null_samples = 500;
    config.extra_splits = 1;
    const auto report = run_pipeline(config, ds);
    CHECK(report.metrics.empty());
    CHECK_FALSE(report.metrics_note.empty());
    CHECK(render_text(report).find(report.metrics_note) != std::string::npos);
    const auto csv = table_csv(report.table);
    CHECK(csv.substr(0, csv.find('\n')) == "rf,mlp,bn,knn,lreg,svm,G,G1,Avg,p");
}

TEST_CASE("tau presets") {
    CHECK(tau_preset("dataset1-stage20") == 0.35);
    CHECK(tau_preset("dataset1-stage50") == 0.35);
    CHECK(tau_preset("dataset2-stage20") == 0.065);
    CHECK(tau_preset("dataset2-stage50") == 0.2);
    CHECK_THROWS_AS(tau_preset("dataset3"), Error);
}

TEST_CASE("errors name their stage") {
    RunConfig config;
    config.input = "/nonexistent/grades.csv";
    try {
        run_pipeline(config);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "ingest");
        CHECK(std::string(e.what()).find("[ingest]") == 0);
    }
    config.folds = 1;
    try {
        run_pipeline(config, synth_ds(40, 1, 1));
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "config");
    }
    RunConfig strict;
    strict.alpha = 1e-9;
    strict.null_samples = 100;
    strict.extra_splits = 0;
    try {
        run_pipeline(strict, synth_ds(60, 0.0, 2));
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "select");
    }
}

TEST_CASE("training never reads the test rows") {
    const auto ds = synth_ds(100, 2.0, 4);
    const auto plan = make_split_plan(ds, 5, 0.7, 1);
    for (const auto& split : plan.splits) {
        auto scrambled = ds;
        for (auto i : split.test) {
            for (auto& m : scrambled.marks[i]) m = 100 - m;
        }
        const auto folds = kfold(split.train, 3, derive_seed(split.seed, 1), ds.labels);
        for (auto id : kAllAlgorithms) {
            CAPTURE(to_string(id));
            auto grid = grid_for(id, DatasetProfile::Dataset1Like, ds.n_features());
            if (id == AlgorithmId::RF) grid.axes[1].second = {ParamValue{50.0}};
            const auto a = grid_search(grid, ds, split.train, folds, 9);
            const auto b = grid_search(grid, scrambled, split.train, folds, 9);
            CHECK(a.all_points == b.all_points);
            CHECK(dump_model(train(id, a.best, ds, split.train, 1)) ==
                  dump_model(train(id, b.best, scrambled, split.train, 1)));
        }
    }
}

}  // TEST_SUITE
