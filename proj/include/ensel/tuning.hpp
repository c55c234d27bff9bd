#pragma once

// Grid search maximizing mean k-fold Gini.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ensel/data_model.hpp"
#include "ensel/keyvalue.hpp"
#include "ensel/learners.hpp"

namespace ensel {

/// Which column of the tuning-range table to use: small course (Dataset1Like)
/// or large course (Dataset2Like).
enum class DatasetProfile { Dataset1Like, Dataset2Like };

std::string_view to_string(DatasetProfile profile);
DatasetProfile parse_profile(std::string_view text);

struct ParamGrid {
    AlgorithmId algorithm = AlgorithmId::LREG;
    DatasetProfile profile = DatasetProfile::Dataset1Like;
    /// Ordered axes; the first axis varies slowest.
    std::vector<std::pair<std::string, std::vector<ParamValue>>> axes;

    /// Cartesian product in grid order. An axis-free grid has one empty point.
    std::vector<ParamPoint> points() const;
};

/// The tuning ranges per algorithm. RF mtry values above `n_features` are dropped.
ParamGrid grid_for(AlgorithmId algorithm, DatasetProfile profile, std::size_t n_features);

/// Replaces axes from `<algorithm>.<param> = v1, v2, ...` entries (e.g. `svm.sigma = 0.1, 0.2`).
void apply_grid_overrides(ParamGrid& grid, const KeyValueFile& overrides);

struct TuneResult {
    ParamPoint best;
    double cv_gini = -1.0;
    std::vector<std::pair<ParamPoint, double>> all_points;
};

/// For every grid point: train on each fold complement, Gini on the fold, mean over
/// folds. Folds holding a single label are left out of the mean; a point with no
/// usable fold scores -1. The earliest point in grid order wins ties.
TuneResult grid_search(const ParamGrid& grid, const Dataset& ds, const TrainIndices& train, const FoldPlan& folds,
                       std::uint64_t seed, unsigned threads = 1);

/// Same search over an explicit feature matrix; fold entries index its rows.
TuneResult grid_search_matrix(const ParamGrid& grid, const FeatureMatrix& x, std::span<const Label> labels,
                              const std::vector<std::string>& feature_names, const FoldPlan& folds,
                              std::uint64_t seed, unsigned threads = 1);

}  // namespace ensel
