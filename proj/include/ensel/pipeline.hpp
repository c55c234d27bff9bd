#pragma once

// End-to-end selection run: split, tune and train the six learners, build the
// ensemble table, select, and evaluate the chosen ensemble.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ensel/analysis.hpp"
#include "ensel/data_model.hpp"
#include "ensel/ensemble_select.hpp"
#include "ensel/error.hpp"
#include "ensel/metrics.hpp"
#include "ensel/tuning.hpp"

namespace ensel {

std::string_view tool_version();

/// Thresholds used for the four published course/stage combinations.
struct TauPreset {
    std::string_view name;
    double tau;
};
inline constexpr std::array<TauPreset, 4> kTauPresets{{
    {"dataset1-stage20", 0.35},
    {"dataset1-stage50", 0.35},
    {"dataset2-stage20", 0.065},
    {"dataset2-stage50", 0.2},
}};
double tau_preset(std::string_view name);

/// Evenly spaced thresholds 0.05, 0.10, ..., 0.95.
std::vector<double> tau_sweep();

struct RunConfig {
    std::string input;
    /// Path to a schema file, or "dataset1" / "dataset2"; empty means every non-id, non-grade column.
    std::string schema;
    Stage stage = Stage::Stage20;
    double train_fraction = 0.7;
    std::size_t folds = 3;
    std::size_t extra_splits = kDefaultExtraSplits;
    std::size_t null_samples = 10000;
    double alpha = kDefaultAlpha;
    std::vector<double> taus;
    bool tau_sweep = false;
    std::uint64_t seed = 1;
    std::string grid_overrides;
    std::vector<AlgorithmId> exclusions;
    NullMode null_mode = NullMode::Average;
    DatasetProfile profile = DatasetProfile::Dataset1Like;
    unsigned threads = 1;
    bool timings = false;
};

void validate(const RunConfig& config);

struct TunedModel {
    AlgorithmId algorithm = AlgorithmId::LREG;
    ParamPoint params;
    double cv_gini = -1.0;
    double test_gini = 0.0;
};

struct SplitSummary {
    std::uint64_t seed = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t test_weak = 0;
    std::vector<TunedModel> models;
    std::string cap_file;
    CapCurve cap;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunReport {
    std::string version;
    RunConfig config;
    std::size_t n_students = 0;
    std::size_t n_weak = 0;
    std::vector<std::string> feature_names;
    std::vector<double> pca_explained_pct;
    std::string pca_note;
    std::vector<SplitSummary> splits;
    SelectionTable table;
    SelectionDecision decision;
    std::vector<ConfusionMetrics> metrics;
    std::string metrics_note;
    std::vector<StageTiming> timings;
};

/// An error from one pipeline stage, tagged with that stage's name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::exception& cause);
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

Schema resolve_schema(const std::string& schema);
Dataset load_dataset(const RunConfig& config);

RunReport run_pipeline(const RunConfig& config);
RunReport run_pipeline(const RunConfig& config, const Dataset& ds);

std::string report_json(const RunReport& report);
RunReport parse_report(std::string_view json_text);
std::string render_text(const RunReport& report);

/// Writes report.json, report.txt, selection_table.csv and one cap_split<i>.csv per split.
void write_report(const RunReport& report, const std::filesystem::path& out_dir);

}  // namespace ensel
