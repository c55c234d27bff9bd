#pragma once

// Grade tables: ingestion, percent scaling, Good/Weak labeling, stratified
// train/test splits and k-fold partitions.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensel/matrix.hpp"

namespace ensel {

/// Weak is the positive class everywhere.
enum class Label : std::uint8_t { Good = 0, Weak = 1 };

enum class Stage { Stage20, Stage50 };

std::string_view to_string(Label label);
std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

/// Weak below the passing grade of 60, Good otherwise.
Label label_for_grade(double final_grade);

/// percent = round_half_up(mark / max * 100), clamped to [0, 100].
int percent_mark(double mark, double feature_max);

long long round_half_up(double x);

struct RawDataset {
    std::vector<std::string> student_ids;
    std::vector<std::string> feature_names;
    std::vector<std::vector<std::optional<double>>> raw_marks;
    std::vector<double> feature_max;
    std::vector<double> final_grade;

    std::size_t size() const noexcept { return student_ids.size(); }

    /// Throws InvalidRawData when a structural invariant is broken.
    void validate() const;
};

struct Dataset {
    std::vector<std::string> student_ids;
    std::vector<std::string> feature_names;
    std::vector<std::vector<int>> marks;
    std::vector<Label> labels;
    Stage stage = Stage::Stage20;

    std::size_t size() const noexcept { return student_ids.size(); }
    std::size_t n_features() const noexcept { return feature_names.size(); }
    std::size_t count(Label label) const;
};

/// Column mapping for CSV ingestion, usually read from a sidecar key/value file:
///
///     id_column = id
///     grade_column = final_grade
///     features = ES1.1, ES1.2, ES2.1
///     max.ES1.1 = 2
///     stage20 = ES1.1, ES1.2
///     stage50 = ES1.1, ES1.2, ES2.1
///
/// Columns without a declared max are taken as already out of 100.
struct Schema {
    std::string id_column = "id";
    std::string grade_column = "final_grade";
    std::vector<std::string> features;  // empty: every other column
    std::map<std::string, double> feature_max;
    std::map<Stage, std::vector<std::string>> stage_features;

    double max_for(const std::string& feature) const;

    static Schema parse(std::string_view text);
    static Schema load(const std::filesystem::path& path);
};

/// Feature lists of the two grade tables the pipeline was designed around.
std::vector<std::string> dataset1_features(Stage stage);
std::vector<std::string> dataset2_features(Stage stage);
Schema dataset1_schema();
Schema dataset2_schema();

RawDataset read_csv(std::istream& in, const Schema& schema);
RawDataset load_csv(const std::filesystem::path& path, const Schema& schema);

/// Zero-fills absent marks, scales to percent, rounds half up and labels each student.
/// `features` selects and orders the columns kept; empty keeps all of them.
Dataset preprocess(const RawDataset& raw, Stage stage, std::span<const std::string> features = {});
Dataset preprocess(const RawDataset& raw, Stage stage, const Schema& schema);

/// Percent marks as a RawDataset with max 100 (final grade 0 for Weak, 100 for Good
/// unless `final_grade` is supplied). Used for writing prepared tables.
RawDataset as_raw(const Dataset& ds, std::span<const double> final_grade = {});

void write_csv(std::ostream& out, const RawDataset& raw, const Schema& schema = {});

// ---------------------------------------------------------------------------
// Index sets

/// Dataset row indices, tagged by role so training code cannot be handed a test set.
template <class Tag>
struct IndexSet {
    std::vector<std::size_t> values;

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
    auto begin() const noexcept { return values.begin(); }
    auto end() const noexcept { return values.end(); }
    std::span<const std::size_t> span() const noexcept { return values; }
    std::size_t operator[](std::size_t i) const { return values[i]; }
    bool operator==(const IndexSet&) const = default;
};

struct TrainTag {};
struct TestTag {};
using TrainIndices = IndexSet<TrainTag>;
using TestIndices = IndexSet<TestTag>;

struct Split {
    TrainIndices train;
    TestIndices test;
    std::uint64_t seed = 0;

    bool operator==(const Split&) const = default;
};

/// Split 0 is the initial split; the rest are the extra resamples.
struct SplitPlan {
    std::vector<Split> splits;
    double train_fraction = 0.7;
    std::uint64_t master_seed = 0;

    const Split& initial() const { return splits.front(); }
    bool operator==(const SplitPlan&) const = default;
};

struct FoldPlan {
    std::size_t k = 3;
    std::vector<std::vector<std::size_t>> folds;

    /// Training rows of fold f: every train index outside it.
    TrainIndices complement(std::size_t f) const;
};

/// Per-label count allocated to the training side: round_half_up(frac * count),
/// clamped to [1, count - 1].
std::size_t train_allocation(std::size_t label_count, double frac);

Split stratified_split(const Dataset& ds, double frac, std::uint64_t seed);

inline constexpr std::size_t kDefaultExtraSplits = 5;

SplitPlan make_split_plan(const Dataset& ds, std::uint64_t seed, double frac = 0.7,
                          std::size_t extra_splits = kDefaultExtraSplits);

/// Stratified folds: each label's indices are shuffled, then dealt round-robin,
/// Weak first, continuing the deal across labels so sizes differ by at most one.
FoldPlan kfold(const TrainIndices& train, std::size_t k, std::uint64_t seed, std::span<const Label> labels);

// ---------------------------------------------------------------------------
// Views used by the learners

FeatureMatrix feature_matrix(const Dataset& ds, std::span<const std::size_t> rows);
std::vector<Label> labels_at(const Dataset& ds, std::span<const std::size_t> rows);
std::vector<std::size_t> all_indices(const Dataset& ds);

}  // namespace ensel
