#pragma once

// Dataset exploration: PCA, permutation importance, SVM decision grids.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ensel/data_model.hpp"
#include "ensel/learners.hpp"
#include "ensel/matrix.hpp"
#include "ensel/tuning.hpp"

namespace ensel {

struct PcaResult {
    /// Features kept after dropping zero-variance columns, in input order.
    std::vector<std::string> feature_names;
    std::vector<std::string> dropped_features;
    /// Percent of total variance per component, non-increasing, summing to 100.
    std::vector<double> explained_variance_pct;
    /// components x features; each row is a unit eigenvector of the correlation matrix.
    FeatureMatrix loadings;
    /// students x components.
    FeatureMatrix scores;
    std::vector<double> center;
    std::vector<double> scale;

    /// Standardizes a row of the kept features with the stored constants and projects it.
    std::vector<double> project(std::span<const double> row) const;
};

/// Correlation PCA over the columns of `x`.
PcaResult pca_matrix(const FeatureMatrix& x, const std::vector<std::string>& feature_names);
PcaResult pca(const Dataset& ds);

/// Standardized copy of `x` restricted to the columns PCA kept.
FeatureMatrix standardized(const PcaResult& result, const FeatureMatrix& x, const std::vector<std::string>& names);

using ImportanceRanking = std::vector<std::pair<std::string, double>>;

/// Mean drop in test Gini when one column is shuffled, floored at 0.
/// Sorted descending; ties keep feature order.
ImportanceRanking permutation_importance(const TrainedModel& model, const Dataset& ds, const TestIndices& test,
                                         std::size_t n_repeats, std::uint64_t seed, unsigned threads = 1);

struct BoundaryGrid {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    std::size_t resolution = 0;
    /// Row-major, y outer: scores[iy * resolution + ix].
    std::vector<double> scores;
    ParamPoint params;
    double cv_gini = -1.0;

    double x_at(std::size_t ix) const;
    double y_at(std::size_t iy) const;
    double at(std::size_t ix, std::size_t iy) const { return scores[iy * resolution + ix]; }
};

/// Projects the training rows onto PC1/PC2, tunes an RBF SVM there with 3-fold CV,
/// and scores a uniform grid padded 10% beyond the data on each side.
BoundaryGrid decision_grid(const Dataset& ds, const TrainIndices& train, std::size_t resolution, std::uint64_t seed,
                           DatasetProfile profile = DatasetProfile::Dataset1Like, unsigned threads = 1);

std::string pca_csv(const PcaResult& result);
std::string grid_csv(const BoundaryGrid& grid);
std::string importance_csv(const ImportanceRanking& ranking);

}  // namespace ensel
