#pragma once

// The six base classifiers behind one train/score interface. Every model
// scores a student with its probability of being Weak, in [0, 1].

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ensel/data_model.hpp"
#include "ensel/matrix.hpp"

namespace ensel {

/// Declaration order is the selection-table column order.
enum class AlgorithmId { RF, MLP, NB, KNN, LREG, SVM };

inline constexpr std::array<AlgorithmId, 6> kAllAlgorithms = {
    AlgorithmId::RF, AlgorithmId::MLP, AlgorithmId::NB, AlgorithmId::KNN, AlgorithmId::LREG, AlgorithmId::SVM};

std::string_view to_string(AlgorithmId id);
/// Lower-case table column name (NB is "bn").
std::string_view column_name(AlgorithmId id);
AlgorithmId parse_algorithm(std::string_view text);

using ParamValue = std::variant<bool, double>;

struct ParamPoint {
    AlgorithmId algorithm = AlgorithmId::LREG;
    std::map<std::string, ParamValue> entries;

    double number(const std::string& name) const;
    bool flag(const std::string& name) const;
    /// "C=0.5 sigma=0.1"; "-" for an empty point.
    std::string describe() const;

    bool operator==(const ParamPoint&) const = default;
};

inline constexpr int kDefaultTrees = 500;

ParamPoint default_params(AlgorithmId id, std::size_t n_features);

/// Throws InvalidParams unless the keys are exactly those of the algorithm and values are in range.
void validate_params(const ParamPoint& params, std::size_t n_features);

using ScoreVector = std::vector<double>;

// ---------------------------------------------------------------------------
// Fitted states

struct KnnState {
    int k = 5;
    FeatureMatrix points;  // percent marks, rows in ascending student index
    std::vector<Label> labels;
};

struct NaiveBayesState {
    bool kernel = false;
    double log_prior_weak = 0.0;
    double log_prior_good = 0.0;
    // [class][feature], class 0 = Good, 1 = Weak
    std::array<std::vector<double>, 2> mean;
    std::array<std::vector<double>, 2> variance;
    std::array<std::vector<double>, 2> bandwidth;
    std::array<FeatureMatrix, 2> samples;  // kernel mode only
};

struct LogisticState {
    std::vector<double> weights;  // on marks / 100
    double intercept = 0.0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Label vote = Label::Good;

    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // root at 0
};

struct ForestState {
    int mtry = 2;
    std::vector<DecisionTree> trees;
};

/// Sigmoid map from a margin m to 1 / (1 + exp(a*m + b)). When the Newton fit
/// fails, or would not be increasing in the margin, scores fall back to
/// min-max scaling over the training margins.
struct PlattFit {
    double a = 0.0;
    double b = 0.0;
    bool fallback = false;
    double min_margin = 0.0;
    double max_margin = 0.0;
};

PlattFit platt_calibrate(std::span<const double> margins, std::span<const Label> labels);
double platt_probability(const PlattFit& fit, double margin);

struct SvmState {
    double c = 1.0;
    double sigma = 0.1;
    FeatureMatrix support;      // marks / 100
    std::vector<double> coef;   // alpha_i * y_i, Weak = +1
    double bias = 0.0;
    PlattFit platt;
};

struct MlpState {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // hidden x inputs, row-major
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
};

using ModelState = std::variant<KnnState, NaiveBayesState, LogisticState, ForestState, SvmState, MlpState>;

struct TrainedModel {
    AlgorithmId algorithm = AlgorithmId::LREG;
    ParamPoint params;
    std::uint64_t train_seed = 0;
    std::vector<std::string> feature_names;
    bool converged = true;
    std::size_t iterations = 0;
    ModelState state;
};

// ---------------------------------------------------------------------------

TrainedModel train(AlgorithmId algorithm, const ParamPoint& params, const Dataset& ds, const TrainIndices& rows,
                   std::uint64_t seed);

/// Same as train() on an explicit percent-scale feature matrix.
TrainedModel train_matrix(const ParamPoint& params, const FeatureMatrix& x, std::span<const Label> y,
                          std::uint64_t seed, std::vector<std::string> feature_names);

/// Throws SchemaMismatch when the dataset's features differ from the training schema.
ScoreVector score(const TrainedModel& model, const Dataset& ds, std::span<const std::size_t> rows);
ScoreVector score_matrix(const TrainedModel& model, const FeatureMatrix& x);

/// SVM decision value before calibration.
double svm_margin(const SvmState& state, std::span<const double> percent_marks);

/// Per-tree votes for one student.
std::vector<Label> forest_votes(const ForestState& state, std::span<const double> percent_marks);

}  // namespace ensel
