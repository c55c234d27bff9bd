#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace ensel::detail {

namespace {

constexpr double kLearningRate = 0.01;
constexpr std::size_t kMaxEpochs = 5000;
constexpr double kGradientTolerance = 1e-6;

}  // namespace

// Gradient ascent on the mean log-likelihood, inputs scaled to [0, 1].
LogisticState fit_logistic(const FeatureMatrix& x, std::span<const Label> y, FitInfo& info) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    LogisticState s;
    s.weights.assign(p, 0.0);

    std::vector<double> grad(p);
    info.converged = false;
    for (std::size_t epoch = 0; epoch < kMaxEpochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = x.row(i);
            double z = s.intercept;
            for (std::size_t j = 0; j < p; ++j) z += s.weights[j] * row[j] / 100.0;
            const double residual = weak_target(y[i]) - sigmoid(z);
            for (std::size_t j = 0; j < p; ++j) grad[j] += residual * row[j] / 100.0;
            grad_b += residual;
        }
        double max_abs = std::abs(grad_b) / static_cast<double>(n);
        for (double g : grad) max_abs = std::max(max_abs, std::abs(g) / static_cast<double>(n));
        info.iterations = epoch + 1;
        if (max_abs < kGradientTolerance) {
            info.converged = true;
            break;
        }
        for (std::size_t j = 0; j < p; ++j) s.weights[j] += kLearningRate * grad[j] / static_cast<double>(n);
        s.intercept += kLearningRate * grad_b / static_cast<double>(n);
    }
    return s;
}

double score_logistic(const LogisticState& s, std::span<const double> row) {
    double z = s.intercept;
    for (std::size_t j = 0; j < row.size(); ++j) z += s.weights[j] * row[j] / 100.0;
    return sigmoid(z);
}

}  // namespace ensel::detail
