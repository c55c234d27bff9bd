#include "ensel/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ensel/keyvalue.hpp"
#include "ensel/parallel.hpp"
#include "ensel/random.hpp"

namespace ensel {

using nlohmann::ordered_json;

#ifndef ENSEL_VERSION
#define ENSEL_VERSION "0.0.0"
#endif

std::string_view tool_version() { return ENSEL_VERSION; }

double tau_preset(std::string_view name) {
    for (const auto& p : kTauPresets) {
        if (p.name == name) return p.tau;
    }
    throw Error(ErrorKind::InvalidArgument, fmt::format("unknown tau preset '{}'", name));
}

std::vector<double> tau_sweep() {
    std::vector<double> out;
    for (int i = 1; i <= 19; ++i) out.push_back(i / 20.0);
    return out;
}

void validate(const RunConfig& config) {
    auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidArgument, why); };
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) fail("train fraction must lie in (0,1)");
    if (config.folds < 2) fail("at least 2 folds are required");
    if (config.null_samples == 0) fail("null samples must be positive");
    if (config.null_samples > 1000000) fail("null samples are capped at 1000000");
    if (!(config.alpha > 0.0 && config.alpha <= 1.0)) fail("alpha must lie in (0,1]");
    for (double t : config.taus) {
        if (!(t >= 0.0 && t <= 1.0)) fail(fmt::format("tau {} is outside [0,1]", t));
    }
    if (config.threads == 0) fail("threads must be at least 1");
}

namespace {

std::string stage_message(const std::string& stage, const std::exception& cause) {
    return fmt::format("[{}] {}", stage, cause.what());
}

template <class Fn>
auto in_stage(const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e);
    }
}

class Stopwatch {
public:
    Stopwatch(std::vector<StageTiming>& out, std::string stage) : out_(out), stage_(std::move(stage)) {}
    ~Stopwatch() {
        const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
        out_.push_back({stage_, d.count()});
    }

private:
    std::vector<StageTiming>& out_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

StageError::StageError(std::string stage, const std::exception& cause)
    : std::runtime_error(stage_message(stage, cause)), stage_(std::move(stage)) {}

Schema resolve_schema(const std::string& schema) {
    if (schema.empty()) return Schema{};
    if (schema == "dataset1") return dataset1_schema();
    if (schema == "dataset2") return dataset2_schema();
    return Schema::load(schema);
}

Dataset load_dataset(const RunConfig& config) {
    const Schema schema = in_stage("schema", [&] { return resolve_schema(config.schema); });
    const RawDataset raw = in_stage("ingest", [&] { return load_csv(config.input, schema); });
    return in_stage("preprocess", [&] { return preprocess(raw, config.stage, schema); });
}

RunReport run_pipeline(const RunConfig& config) { return run_pipeline(config, load_dataset(config)); }

RunReport run_pipeline(const RunConfig& config, const Dataset& ds) {
    in_stage("config", [&] { validate(config); });

    RunReport report;
    report.version = std::string(tool_version());
    report.config = config;
    report.n_students = ds.size();
    report.n_weak = ds.count(Label::Weak);
    report.feature_names = ds.feature_names;
    std::vector<StageTiming> timings;

    try {
        Stopwatch w(timings, "pca");
        report.pca_explained_pct = pca(ds).explained_variance_pct;
    } catch (const Error& e) {
        report.pca_note = fmt::format("PCA skipped: {}", e.what());
    }

    const KeyValueFile overrides = in_stage("config", [&] {
        return config.grid_overrides.empty() ? KeyValueFile{} : KeyValueFile::load(config.grid_overrides);
    });
    std::vector<ParamGrid> grids;
    for (AlgorithmId id : kAllAlgorithms) {
        auto grid = grid_for(id, config.profile, ds.n_features());
        in_stage("config", [&] { apply_grid_overrides(grid, overrides); });
        grids.push_back(std::move(grid));
    }

    const SplitPlan plan = in_stage("split", [&] {
        Stopwatch w(timings, "split");
        return make_split_plan(ds, config.seed, config.train_fraction, config.extra_splits);
    });

    const std::size_t n_splits = plan.splits.size();
    const std::size_t n_alg = kAllAlgorithms.size();
    std::vector<SplitScores> scores(n_splits);
    std::vector<std::vector<TunedModel>> tuned(n_splits, std::vector<TunedModel>(n_alg));
    std::vector<FoldPlan> fold_plans(n_splits);
    in_stage("split", [&] {
        for (std::size_t s = 0; s < n_splits; ++s) {
            const auto& split = plan.splits[s];
            fold_plans[s] = kfold(split.train, config.folds, derive_seed(split.seed, 1), ds.labels);
            scores[s].labels = labels_at(ds, split.test.span());
        }
    });

    in_stage("tune", [&] {
        Stopwatch w(timings, "tune+train");
        parallel_for(n_splits * n_alg, config.threads, [&](std::size_t task) {
            const std::size_t s = task / n_alg;
            const std::size_t a = task % n_alg;
            const auto& split = plan.splits[s];
            const AlgorithmId id = kAllAlgorithms[a];
            const auto result = grid_search(grids[a], ds, split.train, fold_plans[s], derive_seed(split.seed, 10 + a));
            const auto model = train(id, result.best, ds, split.train, derive_seed(split.seed, 20 + a));
            scores[s].by_algorithm[a] = score(model, ds, split.test.span());
            tuned[s][a] = {id, result.best, result.cv_gini, gini(scores[s].by_algorithm[a], scores[s].labels)};
        });
    });

    report.table = in_stage("table", [&] {
        Stopwatch w(timings, "table");
        return build_table(scores, config.null_samples, derive_seed(config.seed, 2), config.null_mode, config.threads);
    });
    report.decision = in_stage("select", [&] { return select_best(report.table, config.alpha, config.exclusions); });

    in_stage("evaluate", [&] {
        const auto& members = report.decision.chosen.members;
        for (std::size_t s = 0; s < n_splits; ++s) {
            std::vector<ScoreVector> chosen;
            for (std::size_t a = 0; a < n_alg; ++a) {
                if (members[a]) chosen.push_back(scores[s].by_algorithm[a]);
            }
            const auto combined = combine_scores(chosen);
            const auto& split = plan.splits[s];
            SplitSummary summary;
            summary.seed = split.seed;
            summary.train_size = split.train.size();
            summary.test_size = split.test.size();
            summary.test_weak = count_labels(scores[s].labels).weak;
            summary.models = tuned[s];
            summary.cap_file = fmt::format("cap_split{}.csv", s);
            summary.cap = cap_curve(combined, scores[s].labels);
            report.splits.push_back(std::move(summary));

            if (s != 0) continue;
            std::vector<double> taus = config.taus;
            if (config.tau_sweep) {
                const auto sweep = tau_sweep();
                taus.insert(taus.end(), sweep.begin(), sweep.end());
            }
            for (double t : taus) report.metrics.push_back(confusion_metrics(combined, scores[s].labels, t));
            if (taus.empty()) report.metrics_note = "no thresholds requested; metrics omitted";
        }
    });

    if (config.timings) report.timings = std::move(timings);
    return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> optional_from(const ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

ordered_json params_json(const ParamPoint& p) {
    ordered_json out = ordered_json::object();
    for (const auto& [name, value] : p.entries) {
        if (const auto* b = std::get_if<bool>(&value)) out[name] = *b;
        else out[name] = std::get<double>(value);
    }
    return out;
}

ParamPoint params_from(AlgorithmId id, const ordered_json& j) {
    ParamPoint p{id, {}};
    for (const auto& [name, value] : j.items()) {
        if (value.is_boolean()) p.entries[name] = value.get<bool>();
        else p.entries[name] = value.get<double>();
    }
    return p;
}

ordered_json config_json(const RunConfig& c) {
    ordered_json j;
    j["input"] = c.input;
    j["schema"] = c.schema;
    j["stage"] = std::string(to_string(c.stage));
    j["train_fraction"] = c.train_fraction;
    j["folds"] = c.folds;
    j["extra_splits"] = c.extra_splits;
    j["null_samples"] = c.null_samples;
    j["alpha"] = c.alpha;
    j["taus"] = c.taus;
    j["tau_sweep"] = c.tau_sweep;
    j["seed"] = c.seed;
    j["grid_overrides"] = c.grid_overrides;
    auto ex = ordered_json::array();
    for (AlgorithmId id : c.exclusions) ex.push_back(std::string(to_string(id)));
    j["exclusions"] = ex;
    j["null_mode"] = c.null_mode == NullMode::Average ? "avg" : "initial";
    j["profile"] = std::string(to_string(c.profile));
    j["threads"] = c.threads;
    j["timings"] = c.timings;
    return j;
}

RunConfig config_from(const ordered_json& j) {
    RunConfig c;
    c.input = j.at("input").get<std::string>();
    c.schema = j.at("schema").get<std::string>();
    c.stage = parse_stage(j.at("stage").get<std::string>());
    c.train_fraction = j.at("train_fraction").get<double>();
    c.folds = j.at("folds").get<std::size_t>();
    c.extra_splits = j.at("extra_splits").get<std::size_t>();
    c.null_samples = j.at("null_samples").get<std::size_t>();
    c.alpha = j.at("alpha").get<double>();
    c.taus = j.at("taus").get<std::vector<double>>();
    c.tau_sweep = j.at("tau_sweep").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.grid_overrides = j.at("grid_overrides").get<std::string>();
    for (const auto& e : j.at("exclusions")) c.exclusions.push_back(parse_algorithm(e.get<std::string>()));
    c.null_mode = j.at("null_mode").get<std::string>() == "initial" ? NullMode::Initial : NullMode::Average;
    c.profile = parse_profile(j.at("profile").get<std::string>());
    c.threads = j.at("threads").get<unsigned>();
    c.timings = j.at("timings").get<bool>();
    return c;
}

ordered_json membership_json(const Membership& m) {
    auto out = ordered_json::array();
    for (std::size_t a = 0; a < m.size(); ++a) {
        if (m[a]) out.push_back(std::string(to_string(kAllAlgorithms[a])));
    }
    return out;
}

Membership membership_from(const ordered_json& j) {
    Membership m{};
    for (const auto& name : j) m[static_cast<std::size_t>(parse_algorithm(name.get<std::string>()))] = true;
    return m;
}

ordered_json row_json(const EnsembleRow& row) {
    ordered_json j;
    j["members"] = membership_json(row.members);
    j["g"] = row.g;
    j["avg"] = row.avg;
    j["p"] = row.p.value;
    return j;
}

EnsembleRow row_from(const ordered_json& j, const SelectionTable& table) {
    EnsembleRow row;
    row.members = membership_from(j.at("members"));
    row.g = j.at("g").get<std::vector<double>>();
    row.avg = j.at("avg").get<double>();
    row.p = PValue{j.at("p").get<double>(), table.null_samples, table.master_seed};
    return row;
}

ordered_json metrics_json(const ConfusionMetrics& m) {
    ordered_json j;
    j["tau"] = m.tau;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["tn"] = m.tn;
    j["fn"] = m.fn;
    j["accuracy"] = optional_json(m.accuracy);
    j["precision"] = optional_json(m.precision);
    j["sensitivity"] = optional_json(m.sensitivity);
    j["f_measure"] = optional_json(m.f_measure);
    j["specificity"] = optional_json(m.specificity);
    return j;
}

ConfusionMetrics metrics_from(const ordered_json& j) {
    ConfusionMetrics m;
    m.tau = j.at("tau").get<double>();
    m.tp = j.at("tp").get<std::size_t>();
    m.fp = j.at("fp").get<std::size_t>();
    m.tn = j.at("tn").get<std::size_t>();
    m.fn = j.at("fn").get<std::size_t>();
    m.accuracy = optional_from(j.at("accuracy"));
    m.precision = optional_from(j.at("precision"));
    m.sensitivity = optional_from(j.at("sensitivity"));
    m.f_measure = optional_from(j.at("f_measure"));
    m.specificity = optional_from(j.at("specificity"));
    return m;
}

}  // namespace

std::string report_json(const RunReport& r) {
    ordered_json j;
    j["tool"] = "ensel";
    j["version"] = r.version;
    j["config"] = config_json(r.config);
    j["data"] = {{"students", r.n_students}, {"weak", r.n_weak}, {"features", r.feature_names}};
    j["pca"] = {{"explained_pct", r.pca_explained_pct}, {"note", r.pca_note}};

    auto splits = ordered_json::array();
    for (const auto& s : r.splits) {
        ordered_json js;
        js["seed"] = s.seed;
        js["train_size"] = s.train_size;
        js["test_size"] = s.test_size;
        js["test_weak"] = s.test_weak;
        auto models = ordered_json::array();
        for (const auto& m : s.models) {
            models.push_back({{"algorithm", std::string(to_string(m.algorithm))},
                              {"params", params_json(m.params)},
                              {"cv_gini", m.cv_gini},
                              {"test_gini", m.test_gini}});
        }
        js["models"] = models;
        js["cap_file"] = s.cap_file;
        auto cap = ordered_json::array();
        for (const auto& p : s.cap) cap.push_back({p.fraction_of_students, p.fraction_of_weak});
        js["cap"] = cap;
        splits.push_back(js);
    }
    j["splits"] = splits;

    ordered_json table;
    table["master_seed"] = r.table.master_seed;
    table["null_samples"] = r.table.null_samples;
    table["null_mode"] = r.table.null_mode == NullMode::Average ? "avg" : "initial";
    auto rows = ordered_json::array();
    for (const auto& row : r.table.rows) rows.push_back(row_json(row));
    table["rows"] = rows;
    j["table"] = table;

    auto ex = ordered_json::array();
    for (AlgorithmId id : r.decision.exclusions) ex.push_back(std::string(to_string(id)));
    j["decision"] = {{"chosen", row_json(r.decision.chosen)},
                     {"rationale", std::string(to_string(r.decision.rationale))},
                     {"exclusions", ex}};

    auto metrics = ordered_json::array();
    for (const auto& m : r.metrics) metrics.push_back(metrics_json(m));
    j["metrics"] = metrics;
    j["metrics_note"] = r.metrics_note;

    if (!r.timings.empty()) {
        auto t = ordered_json::array();
        for (const auto& s : r.timings) t.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
        j["timings"] = t;
    }
    return j.dump(2) + "\n";
}

RunReport parse_report(std::string_view json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Parse, fmt::format("report is not valid JSON: {}", e.what()));
    }
    try {
        RunReport r;
        r.version = j.at("version").get<std::string>();
        r.config = config_from(j.at("config"));
        r.n_students = j.at("data").at("students").get<std::size_t>();
        r.n_weak = j.at("data").at("weak").get<std::size_t>();
        r.feature_names = j.at("data").at("features").get<std::vector<std::string>>();
        r.pca_explained_pct = j.at("pca").at("explained_pct").get<std::vector<double>>();
        r.pca_note = j.at("pca").at("note").get<std::string>();
        for (const auto& js : j.at("splits")) {
            SplitSummary s;
            s.seed = js.at("seed").get<std::uint64_t>();
            s.train_size = js.at("train_size").get<std::size_t>();
            s.test_size = js.at("test_size").get<std::size_t>();
            s.test_weak = js.at("test_weak").get<std::size_t>();
            for (const auto& m : js.at("models")) {
                const AlgorithmId id = parse_algorithm(m.at("algorithm").get<std::string>());
                s.models.push_back({id, params_from(id, m.at("params")), m.at("cv_gini").get<double>(),
                                    m.at("test_gini").get<double>()});
            }
            s.cap_file = js.at("cap_file").get<std::string>();
            for (const auto& p : js.at("cap")) s.cap.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            r.splits.push_back(std::move(s));
        }
        const auto& table = j.at("table");
        r.table.master_seed = table.at("master_seed").get<std::uint64_t>();
        r.table.null_samples = table.at("null_samples").get<std::size_t>();
        r.table.null_mode = table.at("null_mode").get<std::string>() == "initial" ? NullMode::Initial : NullMode::Average;
        for (const auto& row : table.at("rows")) r.table.rows.push_back(row_from(row, r.table));
        const auto& d = j.at("decision");
        r.decision.chosen = row_from(d.at("chosen"), r.table);
        r.decision.rationale =
            d.at("rationale").get<std::string>() == "TopAvg" ? Rationale::TopAvg : Rationale::TopAvgAfterExclusion;
        for (const auto& e : d.at("exclusions")) r.decision.exclusions.push_back(parse_algorithm(e.get<std::string>()));
        for (const auto& m : j.at("metrics")) r.metrics.push_back(metrics_from(m));
        r.metrics_note = j.at("metrics_note").get<std::string>();
        if (j.contains("timings")) {
            for (const auto& t : j.at("timings")) {
                r.timings.push_back({t.at("stage").get<std::string>(), t.at("seconds").get<double>()});
            }
        }
        return r;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Parse, fmt::format("malformed report: {}", e.what()));
    }
}

// ---------------------------------------------------------------------------
// Text

namespace {

std::string opt3(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("n/a"); }

constexpr std::size_t kTextRows = 10;

}  // namespace

std::string render_text(const RunReport& r) {
    std::string out;
    out += fmt::format("ensel {}\n", r.version);
    out += fmt::format("students: {} ({} Weak), features: {}, stage: {}\n", r.n_students, r.n_weak,
                       r.feature_names.size(), to_string(r.config.stage));
    out += fmt::format("splits: {} (train fraction {}), folds: {}, null samples: {}, seed: {}\n", r.splits.size(),
                       r.config.train_fraction, r.config.folds, r.table.null_samples, r.config.seed);
    if (!r.pca_explained_pct.empty()) {
        out += "PCA explained variance (%):";
        double cum = 0.0;
        for (std::size_t k = 0; k < std::min<std::size_t>(4, r.pca_explained_pct.size()); ++k) {
            cum += r.pca_explained_pct[k];
            out += fmt::format(" PC{}={:.1f}", k + 1, r.pca_explained_pct[k]);
        }
        out += fmt::format(" (cumulative {:.1f})\n", cum);
    } else if (!r.pca_note.empty()) {
        out += r.pca_note + "\n";
    }

    out += "\nTuned models (initial split):\n";
    if (!r.splits.empty()) {
        for (const auto& m : r.splits.front().models) {
            out += fmt::format("  {:<5} {:<28} cv Gini {:.3f}  test Gini {:.3f}\n", to_string(m.algorithm),
                               m.params.describe(), m.cv_gini, m.test_gini);
        }
    }

    out += "\nSelection table (top rows):\n";
    out += "  rf mlp bn knn lreg svm";
    const std::size_t n_g = r.table.rows.empty() ? 0 : r.table.rows.front().g.size();
    for (std::size_t s = 0; s < n_g; ++s) out += s == 0 ? fmt::format(" {:>6}", "G") : fmt::format(" {:>6}", fmt::format("G{}", s));
    out += fmt::format(" {:>6} {:>9}\n", "Avg", "p");
    const int widths[] = {2, 3, 2, 3, 4, 3};
    for (std::size_t i = 0; i < std::min(kTextRows, r.table.rows.size()); ++i) {
        const auto& row = r.table.rows[i];
        out += " ";
        for (std::size_t a = 0; a < row.members.size(); ++a) out += fmt::format(" {:>{}}", row.members[a] ? 1 : 0, widths[a]);
        for (double g : row.g) out += fmt::format(" {:6.3f}", g);
        out += fmt::format(" {:6.3f} {:9.3g}\n", row.avg, row.p.value);
    }

    out += fmt::format("\nChosen ensemble: {} (Avg {:.3f}, p {:.3g}, {})\n", describe(r.decision.chosen.members),
                       r.decision.chosen.avg, r.decision.chosen.p.value, to_string(r.decision.rationale));

    out += "\nThresholded metrics on the initial test set:\n";
    if (r.metrics.empty()) {
        out += "  " + (r.metrics_note.empty() ? std::string("none") : r.metrics_note) + "\n";
    } else {
        out += "    tau  accuracy precision sensitivity F-measure specificity\n";
        for (const auto& m : r.metrics) {
            out += fmt::format("  {:5.3f} {:>9} {:>9} {:>11} {:>9} {:>11}\n", m.tau, opt3(m.accuracy), opt3(m.precision),
                               opt3(m.sensitivity), opt3(m.f_measure), opt3(m.specificity));
        }
    }

    if (!r.timings.empty()) {
        out += "\nTimings:\n";
        for (const auto& t : r.timings) out += fmt::format("  {:<12} {:.3f}s\n", t.stage, t.seconds);
    }
    return out;
}

void write_report(const RunReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw Error(ErrorKind::Io, fmt::format("cannot write {}", (out_dir / name).string()));
        f << content;
    };
    write("report.json", report_json(report));
    write("report.txt", render_text(report));
    write("selection_table.csv", table_csv(report.table));
    for (const auto& s : report.splits) write(s.cap_file, cap_csv(s.cap));
}

}  // namespace ensel
