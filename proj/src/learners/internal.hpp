#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "ensel/learners.hpp"

namespace ensel::detail {

struct FitInfo {
    bool converged = true;
    std::size_t iterations = 0;
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double weak_target(Label l) { return l == Label::Weak ? 1.0 : 0.0; }

KnnState fit_knn(const FeatureMatrix& x, std::span<const Label> y, int k);
double score_knn(const KnnState& s, std::span<const double> row);

NaiveBayesState fit_naive_bayes(const FeatureMatrix& x, std::span<const Label> y, bool kernel);
double score_naive_bayes(const NaiveBayesState& s, std::span<const double> row);

LogisticState fit_logistic(const FeatureMatrix& x, std::span<const Label> y, FitInfo& info);
double score_logistic(const LogisticState& s, std::span<const double> row);

ForestState fit_forest(const FeatureMatrix& x, std::span<const Label> y, int mtry, int ntrees, std::uint64_t seed);
double score_forest(const ForestState& s, std::span<const double> row);

SvmState fit_svm(const FeatureMatrix& x, std::span<const Label> y, double c, double sigma, std::uint64_t seed,
                 FitInfo& info);
double score_svm(const SvmState& s, std::span<const double> row);

MlpState fit_mlp(const FeatureMatrix& x, std::span<const Label> y, int neurons, std::uint64_t seed, FitInfo& info);
double score_mlp(const MlpState& s, std::span<const double> row);

}  // namespace ensel::detail
