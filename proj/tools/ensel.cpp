#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ensel/analysis.hpp"
#include "ensel/data_model.hpp"
#include "ensel/pipeline.hpp"
#include "ensel/random.hpp"
#include "ensel/synth.hpp"

namespace fs = std::filesystem;
using namespace ensel;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct DataOptions {
    std::string input;
    std::string schema;
    std::string stage = "20";
};

void add_data_options(CLI::App* cmd, DataOptions& opts) {
    cmd->add_option("-i,--input", opts.input, "grade table CSV")->required();
    cmd->add_option("--schema", opts.schema, "schema file, or dataset1 / dataset2");
    cmd->add_option("--stage", opts.stage, "course stage: 20 or 50")->capture_default_str();
}

RunConfig base_config(const DataOptions& opts) {
    RunConfig c;
    c.input = opts.input;
    c.schema = opts.schema;
    c.stage = parse_stage(opts.stage);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble model selection for early detection of weak students"};
    app.require_subcommand(1);
    std::string stage_name = "cli";

    // ingest
    DataOptions ingest_opts;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "validate and preprocess a grade table");
    add_data_options(ingest, ingest_opts);
    ingest->add_option("-o,--output", ingest_out, "write the percent-scaled table here");

    // synth
    SynthSpec spec;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic grade table");
    synth->add_option("-n,--students", spec.n_students)->capture_default_str();
    synth->add_option("--features", spec.n_features)->capture_default_str();
    synth->add_option("--signal-features", spec.n_signal_features)->capture_default_str();
    synth->add_option("--weak-fraction", spec.weak_fraction)->capture_default_str();
    synth->add_option("--separation", spec.separation)->capture_default_str();
    synth->add_option("--skew", spec.skew)->capture_default_str();
    synth->add_option("--seed", spec.seed)->capture_default_str();
    synth->add_option("-o,--output", synth_out, "CSV path (stdout when omitted)");

    // analyze
    DataOptions analyze_opts;
    std::string analyze_dir = "analysis";
    std::string analyze_model = "RF";
    std::size_t resolution = 50;
    std::size_t repeats = 20;
    std::uint64_t analyze_seed = 1;
    std::string analyze_profile = "dataset1";
    auto* analyze = app.add_subcommand("analyze", "PCA, permutation importance and SVM decision grid");
    add_data_options(analyze, analyze_opts);
    analyze->add_option("-o,--out-dir", analyze_dir)->capture_default_str();
    analyze->add_option("--model", analyze_model, "learner ranked by permutation importance")->capture_default_str();
    analyze->add_option("--resolution", resolution)->capture_default_str();
    analyze->add_option("--repeats", repeats)->capture_default_str();
    analyze->add_option("--seed", analyze_seed)->capture_default_str();
    analyze->add_option("--profile", analyze_profile)->capture_default_str();

    // select
    DataOptions select_opts;
    RunConfig cfg;
    std::string select_dir = "run";
    std::string tau_preset_name;
    std::vector<std::string> exclusions;
    std::string null_on = "avg";
    std::string profile = "dataset1";
    auto* select = app.add_subcommand("select", "run the full ensemble selection pipeline");
    add_data_options(select, select_opts);
    select->add_option("-o,--out-dir", select_dir)->capture_default_str();
    select->add_option("--train-fraction", cfg.train_fraction)->capture_default_str();
    select->add_option("--folds", cfg.folds)->capture_default_str();
    select->add_option("--extra-splits", cfg.extra_splits)->capture_default_str();
    select->add_option("--null-samples", cfg.null_samples)->capture_default_str();
    select->add_option("--alpha", cfg.alpha)->capture_default_str();
    select->add_option("--tau", cfg.taus, "classification thresholds");
    select->add_option("--tau-preset", tau_preset_name,
                       "dataset1-stage20, dataset1-stage50, dataset2-stage20 or dataset2-stage50");
    select->add_flag("--tau-sweep", cfg.tau_sweep, "also report metrics at tau = 0.05, 0.10, ..., 0.95");
    select->add_option("--seed", cfg.seed)->capture_default_str();
    select->add_option("--grid", cfg.grid_overrides, "key/value file of tuning grid overrides");
    select->add_option("--exclude", exclusions, "algorithms barred from the chosen ensemble");
    select->add_option("--null-on", null_on, "avg or initial")->capture_default_str();
    select->add_option("--profile", profile, "tuning ranges: dataset1 or dataset2")->capture_default_str();
    select->add_option("-j,--threads", cfg.threads)->capture_default_str();
    select->add_flag("--timings", cfg.timings, "include wall-clock timings in the report");

    // report
    std::string report_path;
    std::string report_dir;
    auto* report = app.add_subcommand("report", "render a saved run report");
    report->add_option("report", report_path, "report.json")->required();
    report->add_option("-o,--out-dir", report_dir, "also rewrite the CSV artifacts here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            stage_name = "ingest";
            const auto config = base_config(ingest_opts);
            const auto ds = load_dataset(config);
            std::cout << fmt::format("{} students ({} Weak, {} Good), {} features at stage {}\n", ds.size(),
                                     ds.count(Label::Weak), ds.count(Label::Good), ds.n_features(),
                                     to_string(ds.stage));
            if (!ingest_out.empty()) {
                std::ostringstream csv;
                write_csv(csv, as_raw(ds));
                write_file(ingest_out, csv.str());
            }
        } else if (*synth) {
            stage_name = "synth";
            const auto raw = generate_raw(spec);
            std::ostringstream csv;
            write_csv(csv, raw);
            if (synth_out.empty()) std::cout << csv.str();
            else write_file(synth_out, csv.str());
        } else if (*analyze) {
            stage_name = "analyze";
            const auto ds = load_dataset(base_config(analyze_opts));
            const fs::path dir = analyze_dir;
            const auto pc = pca(ds);
            write_file(dir / "pca.csv", pca_csv(pc));
            for (const auto& name : pc.dropped_features) {
                std::cerr << fmt::format("warning: constant feature {} left out of PCA\n", name);
            }

            const auto plan = make_split_plan(ds, analyze_seed, 0.7, 0);
            const auto& split = plan.initial();
            const AlgorithmId id = parse_algorithm(analyze_model);
            const auto prof = parse_profile(analyze_profile);
            const auto folds = kfold(split.train, 3, derive_seed(split.seed, 1), ds.labels);
            const auto tuned = grid_search(grid_for(id, prof, ds.n_features()), ds, split.train, folds,
                                           derive_seed(split.seed, 2));
            const auto model = train(id, tuned.best, ds, split.train, derive_seed(split.seed, 3));
            const auto ranking = permutation_importance(model, ds, split.test, repeats, derive_seed(split.seed, 4));
            write_file(dir / "importance.csv", importance_csv(ranking));

            const auto grid = decision_grid(ds, split.train, resolution, derive_seed(split.seed, 5), prof);
            write_file(dir / "boundary.csv", grid_csv(grid));

            std::cout << "explained variance (%):";
            for (double v : pc.explained_variance_pct) std::cout << fmt::format(" {:.1f}", v);
            std::cout << fmt::format("\n{} importance ({}):", to_string(id), tuned.best.describe());
            for (const auto& [name, value] : ranking) std::cout << fmt::format(" {}={:.3f}", name, value);
            std::cout << fmt::format("\nboundary SVM {} (cv Gini {:.3f}), outputs in {}\n", grid.params.describe(),
                                     grid.cv_gini, dir.string());
        } else if (*select) {
            stage_name = "config";
            RunConfig config = cfg;
            const RunConfig base = base_config(select_opts);
            config.input = base.input;
            config.schema = base.schema;
            config.stage = base.stage;
            if (!tau_preset_name.empty()) config.taus.push_back(tau_preset(tau_preset_name));
            for (const auto& e : exclusions) config.exclusions.push_back(parse_algorithm(e));
            if (null_on == "avg") config.null_mode = NullMode::Average;
            else if (null_on == "initial") config.null_mode = NullMode::Initial;
            else throw Error(ErrorKind::InvalidArgument, "--null-on must be avg or initial");
            config.profile = parse_profile(profile);

            const auto result = run_pipeline(config);
            stage_name = "report";
            write_report(result, select_dir);
            std::cout << render_text(result);
        } else if (*report) {
            stage_name = "report";
            const auto result = parse_report(read_file(report_path));
            if (!report_dir.empty()) write_report(result, report_dir);
            std::cout << render_text(result);
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << fmt::format("error: [{}] {}\n", stage_name, e.what());
        return 2;
    }
    return 0;
}
