#include "ensel/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "ensel/error.hpp"
#include "ensel/metrics.hpp"
#include "ensel/parallel.hpp"
#include "ensel/random.hpp"

namespace ensel {

namespace {

constexpr double kZeroVariance = 1e-12;
constexpr double kPadding = 0.10;
constexpr std::size_t kGridFolds = 3;

}  // namespace

std::vector<double> PcaResult::project(std::span<const double> row) const {
    std::vector<double> out(loadings.rows(), 0.0);
    for (std::size_t k = 0; k < loadings.rows(); ++k) {
        for (std::size_t j = 0; j < loadings.cols(); ++j) out[k] += loadings(k, j) * (row[j] - center[j]) / scale[j];
    }
    return out;
}

PcaResult pca_matrix(const FeatureMatrix& x, const std::vector<std::string>& feature_names) {
    const std::size_t n = x.rows();
    if (n < 2) throw Error(ErrorKind::DegenerateData, "PCA needs at least 2 students");
    if (feature_names.size() != x.cols()) throw Error(ErrorKind::LengthMismatch, "feature names do not match columns");

    PcaResult result;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (sd < kZeroVariance) {
            result.dropped_features.push_back(feature_names[j]);
            continue;
        }
        kept.push_back(j);
        result.feature_names.push_back(feature_names[j]);
        result.center.push_back(mean);
        result.scale.push_back(sd);
    }
    const std::size_t p = kept.size();
    if (p < 2) {
        throw Error(ErrorKind::DegenerateData, fmt::format("PCA needs at least 2 non-constant features, found {}", p));
    }

    Eigen::MatrixXd z(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < p; ++c) {
            z(Eigen::Index(i), Eigen::Index(c)) = (x(i, kept[c]) - result.center[c]) / result.scale[c];
        }
    }
    const Eigen::MatrixXd corr = (z.transpose() * z) / static_cast<double>(n - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::DegenerateData, "eigendecomposition failed");

    std::vector<double> values(p);
    for (std::size_t k = 0; k < p; ++k) values[k] = std::max(0.0, solver.eigenvalues()(Eigen::Index(p - 1 - k)));
    const double total = std::accumulate(values.begin(), values.end(), 0.0);

    result.loadings = FeatureMatrix(p, p);
    for (std::size_t k = 0; k < p; ++k) {
        result.explained_variance_pct.push_back(100.0 * values[k] / total);
        const auto vec = solver.eigenvectors().col(Eigen::Index(p - 1 - k));
        std::size_t biggest = 0;
        for (std::size_t j = 1; j < p; ++j) {
            if (std::abs(vec(Eigen::Index(j))) > std::abs(vec(Eigen::Index(biggest))) + 1e-12) biggest = j;
        }
        const double sign = vec(Eigen::Index(biggest)) < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < p; ++j) result.loadings(k, j) = sign * vec(Eigen::Index(j));
    }

    result.scores = FeatureMatrix(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < p; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) s += z(Eigen::Index(i), Eigen::Index(j)) * result.loadings(k, j);
            result.scores(i, k) = s;
        }
    }
    return result;
}

PcaResult pca(const Dataset& ds) {
    const auto rows = all_indices(ds);
    return pca_matrix(feature_matrix(ds, rows), ds.feature_names);
}

FeatureMatrix standardized(const PcaResult& result, const FeatureMatrix& x, const std::vector<std::string>& names) {
    FeatureMatrix out(x.rows(), result.feature_names.size());
    for (std::size_t c = 0; c < result.feature_names.size(); ++c) {
        const auto it = std::find(names.begin(), names.end(), result.feature_names[c]);
        if (it == names.end()) throw Error(ErrorKind::SchemaMismatch, "missing feature " + result.feature_names[c]);
        const auto j = static_cast<std::size_t>(it - names.begin());
        for (std::size_t i = 0; i < x.rows(); ++i) out(i, c) = (x(i, j) - result.center[c]) / result.scale[c];
    }
    return out;
}

ImportanceRanking permutation_importance(const TrainedModel& model, const Dataset& ds, const TestIndices& test,
                                         std::size_t n_repeats, std::uint64_t seed, unsigned threads) {
    if (n_repeats == 0) throw Error(ErrorKind::InvalidRepeats, "n_repeats must be at least 1");
    if (ds.feature_names != model.feature_names) {
        throw Error(ErrorKind::SchemaMismatch, "dataset features differ from the model's training features");
    }
    const auto labels = labels_at(ds, test.span());
    const auto counts = count_labels(labels);
    if (counts.weak == 0 || counts.good == 0) {
        throw Error(ErrorKind::SingleClassSample, "permutation importance needs both labels in the test rows");
    }
    const auto x = feature_matrix(ds, test.span());
    const double baseline = gini(score_matrix(model, x), labels);

    const std::size_t p = x.cols();
    std::vector<double> importance(p, 0.0);
    parallel_for(p, threads, [&](std::size_t j) {
        const std::uint64_t feature_seed = derive_seed(seed, j);
        FeatureMatrix shuffled = x;
        std::vector<std::size_t> order(x.rows());
        double sum = 0.0;
        for (std::size_t r = 0; r < n_repeats; ++r) {
            Rng rng(derive_seed(feature_seed, r));
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t i = 0; i < x.rows(); ++i) shuffled(i, j) = x(order[i], j);
            sum += baseline - gini(score_matrix(model, shuffled), labels);
        }
        importance[j] = std::max(0.0, sum / static_cast<double>(n_repeats));
    });

    ImportanceRanking ranking;
    for (std::size_t j = 0; j < p; ++j) ranking.emplace_back(ds.feature_names[j], importance[j]);
    std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranking;
}

double BoundaryGrid::x_at(std::size_t ix) const {
    return x_min + (x_max - x_min) * static_cast<double>(ix) / static_cast<double>(resolution - 1);
}

double BoundaryGrid::y_at(std::size_t iy) const {
    return y_min + (y_max - y_min) * static_cast<double>(iy) / static_cast<double>(resolution - 1);
}

namespace {

std::pair<double, double> padded_range(const FeatureMatrix& s, std::size_t col) {
    double lo = s(0, col);
    double hi = s(0, col);
    for (std::size_t i = 1; i < s.rows(); ++i) {
        lo = std::min(lo, s(i, col));
        hi = std::max(hi, s(i, col));
    }
    const double pad = hi > lo ? kPadding * (hi - lo) : 1.0;
    return {lo - pad, hi + pad};
}

}  // namespace

BoundaryGrid decision_grid(const Dataset& ds, const TrainIndices& train, std::size_t resolution, std::uint64_t seed,
                           DatasetProfile profile, unsigned threads) {
    if (resolution < 2) throw Error(ErrorKind::InvalidArgument, "grid resolution must be at least 2");
    const auto x = feature_matrix(ds, train.span());
    const auto labels = labels_at(ds, train.span());
    const auto projection = pca_matrix(x, ds.feature_names);

    BoundaryGrid grid;
    grid.resolution = resolution;
    std::tie(grid.x_min, grid.x_max) = padded_range(projection.scores, 0);
    std::tie(grid.y_min, grid.y_max) = padded_range(projection.scores, 1);

    // The SVM sees the padded box mapped onto the 0..100 mark scale.
    auto to_marks = [&](double px, double py, std::span<double> out) {
        out[0] = 100.0 * (px - grid.x_min) / (grid.x_max - grid.x_min);
        out[1] = 100.0 * (py - grid.y_min) / (grid.y_max - grid.y_min);
    };
    FeatureMatrix plane(x.rows(), 2);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        to_marks(projection.scores(i, 0), projection.scores(i, 1), plane.row(i));
    }
    const std::vector<std::string> names{"PC1", "PC2"};

    std::vector<std::size_t> local(x.rows());
    std::iota(local.begin(), local.end(), std::size_t{0});
    const auto folds = kfold(TrainIndices{local}, kGridFolds, derive_seed(seed, 0), labels);
    const auto tuned = grid_search_matrix(grid_for(AlgorithmId::SVM, profile, 2), plane, labels, names, folds,
                                          derive_seed(seed, 1), threads);
    const auto model = train_matrix(tuned.best, plane, labels, derive_seed(seed, 2), names);
    grid.params = tuned.best;
    grid.cv_gini = tuned.cv_gini;

    FeatureMatrix cells(resolution * resolution, 2);
    for (std::size_t iy = 0; iy < resolution; ++iy) {
        for (std::size_t ix = 0; ix < resolution; ++ix) {
            to_marks(grid.x_at(ix), grid.y_at(iy), cells.row(iy * resolution + ix));
        }
    }
    grid.scores = score_matrix(model, cells);
    return grid;
}

std::string pca_csv(const PcaResult& result) {
    std::string out = "component,explained_pct";
    for (const auto& name : result.feature_names) out += "," + name;
    out += '\n';
    for (std::size_t k = 0; k < result.loadings.rows(); ++k) {
        out += fmt::format("PC{},{:.6f}", k + 1, result.explained_variance_pct[k]);
        for (std::size_t j = 0; j < result.loadings.cols(); ++j) out += fmt::format(",{:.6f}", result.loadings(k, j));
        out += '\n';
    }
    return out;
}

std::string grid_csv(const BoundaryGrid& grid) {
    std::string out = "pc1,pc2,score\n";
    for (std::size_t iy = 0; iy < grid.resolution; ++iy) {
        for (std::size_t ix = 0; ix < grid.resolution; ++ix) {
            out += fmt::format("{:.6f},{:.6f},{:.6f}\n", grid.x_at(ix), grid.y_at(iy), grid.at(ix, iy));
        }
    }
    return out;
}

std::string importance_csv(const ImportanceRanking& ranking) {
    std::string out = "feature,importance\n";
    for (const auto& [name, value] : ranking) out += fmt::format("{},{:.6f}\n", name, value);
    return out;
}

}  // namespace ensel
