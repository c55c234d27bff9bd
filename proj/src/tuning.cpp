#include "ensel/tuning.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "ensel/error.hpp"
#include "ensel/metrics.hpp"
#include "ensel/parallel.hpp"
#include "ensel/random.hpp"

namespace ensel {

std::string_view to_string(DatasetProfile profile) {
    return profile == DatasetProfile::Dataset1Like ? "dataset1" : "dataset2";
}

DatasetProfile parse_profile(std::string_view text) {
    if (text == "dataset1" || text == "1" || text == "Dataset1Like") return DatasetProfile::Dataset1Like;
    if (text == "dataset2" || text == "2" || text == "Dataset2Like") return DatasetProfile::Dataset2Like;
    throw Error(ErrorKind::InvalidArgument, "unknown profile '" + std::string(text) + "'");
}

std::vector<ParamPoint> ParamGrid::points() const {
    std::vector<ParamPoint> out{ParamPoint{algorithm, {}}};
    for (const auto& [name, values] : axes) {
        std::vector<ParamPoint> expanded;
        for (const auto& p : out) {
            for (const auto& v : values) {
                ParamPoint q = p;
                q.entries[name] = v;
                expanded.push_back(std::move(q));
            }
        }
        out = std::move(expanded);
    }
    return out;
}

namespace {

std::vector<ParamValue> numbers(std::initializer_list<double> values) { return {values.begin(), values.end()}; }

}  // namespace

ParamGrid grid_for(AlgorithmId algorithm, DatasetProfile profile, std::size_t n_features) {
    ParamGrid g{algorithm, profile, {}};
    const bool small = profile == DatasetProfile::Dataset1Like;
    switch (algorithm) {
        case AlgorithmId::SVM:
            g.axes.emplace_back("C", numbers({0.25, 0.5, 1.0}));
            g.axes.emplace_back("sigma", small ? numbers({0.05, 0.10, 0.15, 0.20, 0.25})
                                               : numbers({0.3, 0.4, 0.5, 0.6, 0.7, 0.8}));
            break;
        case AlgorithmId::NB: g.axes.emplace_back("usekernel", std::vector<ParamValue>{true, false}); break;
        case AlgorithmId::KNN: {
            std::vector<ParamValue> k;
            for (int v = 5; v <= 43; v += 2) k.emplace_back(static_cast<double>(v));
            g.axes.emplace_back("k", std::move(k));
            break;
        }
        case AlgorithmId::MLP:
            g.axes.emplace_back("neurons", numbers({1.0, 3.0, 5.0}));
            g.axes.emplace_back("hidden_layers", numbers({1.0}));
            break;
        case AlgorithmId::RF: {
            std::vector<ParamValue> mtry;
            const int hi = small ? 12 : 4;
            for (int v = 2; v <= hi; ++v) {
                if (static_cast<std::size_t>(v) <= n_features) mtry.emplace_back(static_cast<double>(v));
            }
            if (mtry.empty()) mtry.emplace_back(static_cast<double>(std::max<std::size_t>(1, n_features)));
            g.axes.emplace_back("mtry", std::move(mtry));
            g.axes.emplace_back("ntrees", numbers({static_cast<double>(kDefaultTrees)}));
            break;
        }
        case AlgorithmId::LREG: break;
    }
    return g;
}

void apply_grid_overrides(ParamGrid& grid, const KeyValueFile& overrides) {
    const std::string prefix = [&] {
        std::string s(column_name(grid.algorithm));
        return s == "bn" ? std::string("nb.") : s + ".";
    }();
    for (const auto& [key, value] : overrides.entries()) {
        if (key.rfind(prefix, 0) != 0) continue;
        const std::string name = key.substr(prefix.size());
        std::vector<ParamValue> values;
        for (const auto& item : split_list(value)) {
            if (item == "true" || item == "TRUE") values.emplace_back(true);
            else if (item == "false" || item == "FALSE") values.emplace_back(false);
            else values.emplace_back(parse_double(item, key));
        }
        if (values.empty()) throw Error(ErrorKind::Parse, "grid override '" + key + "' has no values");
        auto it = std::find_if(grid.axes.begin(), grid.axes.end(), [&](const auto& a) { return a.first == name; });
        if (it == grid.axes.end()) {
            throw Error(ErrorKind::Parse, fmt::format("{} has no tuning parameter '{}'", to_string(grid.algorithm), name));
        }
        it->second = std::move(values);
    }
}

namespace {

FeatureMatrix take_rows(const FeatureMatrix& x, std::span<const std::size_t> rows) {
    FeatureMatrix out(rows.size(), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) std::copy_n(x.row(rows[r]).begin(), x.cols(), out.row(r).begin());
    return out;
}

std::vector<Label> take_labels(std::span<const Label> labels, std::span<const std::size_t> rows) {
    std::vector<Label> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(labels[r]);
    return out;
}

}  // namespace

TuneResult grid_search_matrix(const ParamGrid& grid, const FeatureMatrix& x, std::span<const Label> labels,
                              const std::vector<std::string>& feature_names, const FoldPlan& folds,
                              std::uint64_t seed, unsigned threads) {
    if (x.rows() != labels.size()) throw Error(ErrorKind::LengthMismatch, "feature rows and labels differ in length");
    const auto points = grid.points();
    std::vector<double> cv(points.size(), -1.0);
    parallel_for(points.size(), threads, [&](std::size_t p) {
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t f = 0; f < folds.folds.size(); ++f) {
            const auto& held_out = folds.folds[f];
            const auto held_labels = take_labels(labels, held_out);
            const auto counts = count_labels(held_labels);
            if (counts.weak == 0 || counts.good == 0) continue;
            const auto fit_rows = folds.complement(f);
            const auto model = train_matrix(points[p], take_rows(x, fit_rows.span()),
                                            take_labels(labels, fit_rows.span()), derive_seed(seed, f), feature_names);
            sum += gini(score_matrix(model, take_rows(x, held_out)), held_labels);
            ++used;
        }
        cv[p] = used == 0 ? -1.0 : sum / static_cast<double>(used);
    });

    TuneResult result;
    std::size_t best = 0;
    for (std::size_t p = 0; p < points.size(); ++p) {
        result.all_points.emplace_back(points[p], cv[p]);
        if (cv[p] > cv[best]) best = p;
    }
    result.best = points[best];
    result.cv_gini = cv[best];
    return result;
}

TuneResult grid_search(const ParamGrid& grid, const Dataset& ds, const TrainIndices& train, const FoldPlan& folds,
                       std::uint64_t seed, unsigned threads) {
    const std::set<std::size_t> train_set(train.begin(), train.end());
    for (const auto& fold : folds.folds) {
        for (std::size_t idx : fold) {
            if (!train_set.count(idx)) {
                throw Error(ErrorKind::InvalidArgument, "fold plan reaches outside the training indices");
            }
        }
    }
    // Rows of the local matrix are the training rows only; fold indices are remapped onto them.
    const auto x = feature_matrix(ds, train.span());
    const auto labels = labels_at(ds, train.span());
    FoldPlan local{folds.k, {}};
    for (const auto& fold : folds.folds) {
        std::vector<std::size_t> rows;
        for (std::size_t idx : fold) {
            rows.push_back(static_cast<std::size_t>(std::lower_bound(train.begin(), train.end(), idx) - train.begin()));
        }
        local.folds.push_back(std::move(rows));
    }
    return grid_search_matrix(grid, x, labels, ds.feature_names, local, seed, threads);
}

}  // namespace ensel
