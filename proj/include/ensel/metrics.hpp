#pragma once

// Rank statistics (AUC / Gini), CAP curves, Monte-Carlo p-values and
// thresholded confusion metrics. Weak is the positive class.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ensel/data_model.hpp"

namespace ensel {

/// Mann-Whitney AUC with half credit for ties, via average ranks.
/// Throws SingleClassSample unless both labels are present.
double auc(std::span<const double> scores, std::span<const Label> labels);

/// 2 * AUC - 1, in [-1, 1].
double gini(std::span<const double> scores, std::span<const Label> labels);

struct CapPoint {
    double fraction_of_students = 0.0;
    double fraction_of_weak = 0.0;
};
using CapCurve = std::vector<CapPoint>;

/// n + 1 points from (0,0) to (1,1), students taken by descending score
/// with ties in ascending index order.
CapCurve cap_curve(std::span<const double> scores, std::span<const Label> labels);

/// Trapezoid area under a CAP curve.
double cap_area(const CapCurve& curve);

std::string cap_csv(const CapCurve& curve);

struct PValue {
    double value = 1.0;
    std::size_t null_samples = 0;
    std::uint64_t null_seed = 0;
};

struct LabelCounts {
    std::size_t weak = 0;
    std::size_t good = 0;
};

LabelCounts count_labels(std::span<const Label> labels);

/// Null distribution of the average Gini over several test sets when every
/// score vector is i.i.d. standard normal. Draws are generated in fixed-size
/// chunks with derived seeds, so the sample does not depend on `threads`.
class NullDistribution {
public:
    static constexpr std::size_t kChunk = 1024;

    static NullDistribution sample(std::span<const LabelCounts> test_sets, std::size_t samples,
                                   std::uint64_t seed, unsigned threads = 1);

    /// (1 + #{null >= observed}) / (R + 1); draws within 1e-12 of `observed` count as >=.
    PValue p_value(double observed) const;

    std::size_t size() const noexcept { return sorted_.size(); }
    const std::vector<double>& sorted_values() const noexcept { return sorted_; }

private:
    std::vector<double> sorted_;
    std::uint64_t seed_ = 0;
};

/// Monte-Carlo p-value of an observed average Gini over the given test label sets.
PValue mc_pvalue(double observed_avg, const std::vector<std::vector<Label>>& test_label_sets, std::size_t samples,
                 std::uint64_t seed, unsigned threads = 1);

/// Ratios with a zero denominator are left empty.
struct ConfusionMetrics {
    double tau = 0.5;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> sensitivity;
    std::optional<double> f_measure;
    std::optional<double> specificity;
};

/// Predicted Weak <=> score >= tau.
ConfusionMetrics confusion_metrics(std::span<const double> scores, std::span<const Label> labels, double tau);

}  // namespace ensel
