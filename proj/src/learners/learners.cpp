#include "ensel/learners.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ensel/error.hpp"
#include "internal.hpp"

namespace ensel {

std::string_view to_string(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::RF: return "RF";
        case AlgorithmId::MLP: return "MLP";
        case AlgorithmId::NB: return "NB";
        case AlgorithmId::KNN: return "KNN";
        case AlgorithmId::LREG: return "LREG";
        case AlgorithmId::SVM: return "SVM";
    }
    return "?";
}

std::string_view column_name(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::RF: return "rf";
        case AlgorithmId::MLP: return "mlp";
        case AlgorithmId::NB: return "bn";
        case AlgorithmId::KNN: return "knn";
        case AlgorithmId::LREG: return "lreg";
        case AlgorithmId::SVM: return "svm";
    }
    return "?";
}

AlgorithmId parse_algorithm(std::string_view text) {
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (t == "BN" || t == "NAIVEBAYES") t = "NB";
    if (t == "LR" || t == "LOGISTIC") t = "LREG";
    if (t == "K-NN") t = "KNN";
    for (AlgorithmId id : kAllAlgorithms) {
        if (to_string(id) == t) return id;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + std::string(text) + "'");
}

double ParamPoint::number(const std::string& name) const {
    const auto it = entries.find(name);
    if (it == entries.end()) throw Error(ErrorKind::InvalidParams, "missing parameter '" + name + "'");
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    return std::get<bool>(it->second) ? 1.0 : 0.0;
}

bool ParamPoint::flag(const std::string& name) const {
    const auto it = entries.find(name);
    if (it == entries.end()) throw Error(ErrorKind::InvalidParams, "missing parameter '" + name + "'");
    if (const auto* b = std::get_if<bool>(&it->second)) return *b;
    return std::get<double>(it->second) != 0.0;
}

std::string ParamPoint::describe() const {
    if (entries.empty()) return "-";
    std::string out;
    for (const auto& [name, value] : entries) {
        if (!out.empty()) out += ' ';
        if (const auto* b = std::get_if<bool>(&value)) {
            out += fmt::format("{}={}", name, *b ? "true" : "false");
        } else {
            out += fmt::format("{}={}", name, std::get<double>(value));
        }
    }
    return out;
}

ParamPoint default_params(AlgorithmId id, std::size_t n_features) {
    ParamPoint p{id, {}};
    switch (id) {
        case AlgorithmId::RF:
            p.entries["mtry"] = std::max(1.0, std::floor(std::sqrt(static_cast<double>(n_features))));
            p.entries["ntrees"] = static_cast<double>(kDefaultTrees);
            break;
        case AlgorithmId::MLP:
            p.entries["neurons"] = 3.0;
            p.entries["hidden_layers"] = 1.0;
            break;
        case AlgorithmId::NB: p.entries["usekernel"] = false; break;
        case AlgorithmId::KNN: p.entries["k"] = 5.0; break;
        case AlgorithmId::LREG: break;
        case AlgorithmId::SVM:
            p.entries["C"] = 1.0;
            p.entries["sigma"] = 0.1;
            break;
    }
    return p;
}

namespace {

bool is_positive_integer(double v) { return v >= 1.0 && std::floor(v) == v; }

}  // namespace

void validate_params(const ParamPoint& params, std::size_t n_features) {
    std::set<std::string> expected;
    for (const auto& [name, _] : default_params(params.algorithm, n_features).entries) expected.insert(name);
    std::set<std::string> actual;
    for (const auto& [name, _] : params.entries) actual.insert(name);
    if (expected != actual) {
        throw Error(ErrorKind::InvalidParams,
                    fmt::format("{} parameters must be exactly [{}]", to_string(params.algorithm),
                                fmt::join(expected, ", ")));
    }
    auto fail = [&](const std::string& why) {
        throw Error(ErrorKind::InvalidParams, fmt::format("{}: {}", to_string(params.algorithm), why));
    };
    switch (params.algorithm) {
        case AlgorithmId::RF:
            if (!is_positive_integer(params.number("mtry")) || params.number("mtry") > static_cast<double>(n_features)) {
                fail("mtry must be an integer in [1, feature count]");
            }
            if (!is_positive_integer(params.number("ntrees"))) fail("ntrees must be a positive integer");
            break;
        case AlgorithmId::MLP:
            if (!is_positive_integer(params.number("neurons"))) fail("neurons must be a positive integer");
            if (params.number("hidden_layers") != 1.0) fail("only one hidden layer is supported");
            break;
        case AlgorithmId::NB: break;
        case AlgorithmId::KNN:
            if (!is_positive_integer(params.number("k"))) fail("k must be a positive integer");
            break;
        case AlgorithmId::LREG: break;
        case AlgorithmId::SVM:
            if (!(params.number("C") > 0.0)) fail("C must be positive");
            if (!(params.number("sigma") > 0.0)) fail("sigma must be positive");
            break;
    }
}

TrainedModel train_matrix(const ParamPoint& params, const FeatureMatrix& x, std::span<const Label> y,
                          std::uint64_t seed, std::vector<std::string> feature_names) {
    if (x.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "feature rows and labels differ in length");
    if (feature_names.size() != x.cols()) throw Error(ErrorKind::LengthMismatch, "feature name count mismatch");
    validate_params(params, x.cols());
    const bool has_weak = std::find(y.begin(), y.end(), Label::Weak) != y.end();
    const bool has_good = std::find(y.begin(), y.end(), Label::Good) != y.end();
    if (!has_weak || !has_good) {
        throw Error(ErrorKind::SingleClassTrainingSet, "training set must contain both Weak and Good students");
    }

    TrainedModel model;
    model.algorithm = params.algorithm;
    model.params = params;
    model.train_seed = seed;
    model.feature_names = std::move(feature_names);
    detail::FitInfo info;
    switch (params.algorithm) {
        case AlgorithmId::KNN:
            model.state = detail::fit_knn(x, y, static_cast<int>(params.number("k")));
            break;
        case AlgorithmId::NB:
            model.state = detail::fit_naive_bayes(x, y, params.flag("usekernel"));
            break;
        case AlgorithmId::LREG:
            model.state = detail::fit_logistic(x, y, info);
            break;
        case AlgorithmId::RF:
            model.state = detail::fit_forest(x, y, static_cast<int>(params.number("mtry")),
                                             static_cast<int>(params.number("ntrees")), seed);
            break;
        case AlgorithmId::SVM:
            model.state = detail::fit_svm(x, y, params.number("C"), params.number("sigma"), seed, info);
            break;
        case AlgorithmId::MLP:
            model.state = detail::fit_mlp(x, y, static_cast<int>(params.number("neurons")), seed, info);
            break;
    }
    model.converged = info.converged;
    model.iterations = info.iterations;
    return model;
}

TrainedModel train(AlgorithmId algorithm, const ParamPoint& params, const Dataset& ds, const TrainIndices& rows,
                   std::uint64_t seed) {
    if (params.algorithm != algorithm) {
        throw Error(ErrorKind::InvalidParams, fmt::format("parameters are for {}, not {}", to_string(params.algorithm),
                                                          to_string(algorithm)));
    }
    const auto x = feature_matrix(ds, rows.span());
    const auto y = labels_at(ds, rows.span());
    return train_matrix(params, x, y, seed, ds.feature_names);
}

ScoreVector score_matrix(const TrainedModel& model, const FeatureMatrix& x) {
    if (x.cols() != model.feature_names.size()) {
        throw Error(ErrorKind::SchemaMismatch,
                    fmt::format("model expects {} features, got {}", model.feature_names.size(), x.cols()));
    }
    ScoreVector out(x.rows());
    std::visit(
        [&](const auto& state) {
            using S = std::decay_t<decltype(state)>;
            for (std::size_t r = 0; r < x.rows(); ++r) {
                double s = 0.0;
                if constexpr (std::is_same_v<S, KnnState>) s = detail::score_knn(state, x.row(r));
                else if constexpr (std::is_same_v<S, NaiveBayesState>) s = detail::score_naive_bayes(state, x.row(r));
                else if constexpr (std::is_same_v<S, LogisticState>) s = detail::score_logistic(state, x.row(r));
                else if constexpr (std::is_same_v<S, ForestState>) s = detail::score_forest(state, x.row(r));
                else if constexpr (std::is_same_v<S, SvmState>) s = detail::score_svm(state, x.row(r));
                else s = detail::score_mlp(state, x.row(r));
                out[r] = std::clamp(s, 0.0, 1.0);
            }
        },
        model.state);
    return out;
}

ScoreVector score(const TrainedModel& model, const Dataset& ds, std::span<const std::size_t> rows) {
    if (ds.feature_names != model.feature_names) {
        throw Error(ErrorKind::SchemaMismatch, "dataset features differ from the model's training schema");
    }
    return score_matrix(model, feature_matrix(ds, rows));
}

}  // namespace ensel
