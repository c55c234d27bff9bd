#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace ensel::detail {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample variance (n - 1); 0 for fewer than two values.
double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// Type-7 sample quantile of sorted values.
double quantile(const std::vector<double>& sorted, double q) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Silverman's rule of thumb, 0.9 * min(sd, IQR / 1.34) * n^(-1/5), with the usual
// fallbacks (sd, then |x_1|, then 1) when the spread estimate is zero.
double silverman_bandwidth(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double sd = std::sqrt(variance_of(values));
    const double iqr = quantile(values, 0.75) - quantile(values, 0.25);
    double lo = std::min(sd, iqr / 1.34);
    if (!(lo > 0.0)) lo = sd;
    if (!(lo > 0.0)) lo = std::abs(values.front());
    if (!(lo > 0.0)) lo = 1.0;
    return 0.9 * lo * std::pow(static_cast<double>(values.size()), -0.2);
}

double log_gaussian(double x, double mean, double var) {
    const double d = x - mean;
    return -kLogSqrt2Pi - 0.5 * std::log(var) - d * d / (2.0 * var);
}

// log of the Gaussian kernel density at x, computed with log-sum-exp.
double log_kde(double x, const FeatureMatrix& samples, std::size_t feature, double h) {
    const std::size_t n = samples.rows();
    double max_term = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (x - samples(i, feature)) / h;
        max_term = std::max(max_term, -0.5 * z * z);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (x - samples(i, feature)) / h;
        sum += std::exp(-0.5 * z * z - max_term);
    }
    return max_term + std::log(sum) - std::log(static_cast<double>(n) * h) - kLogSqrt2Pi;
}

}  // namespace

NaiveBayesState fit_naive_bayes(const FeatureMatrix& x, std::span<const Label> y, bool kernel) {
    const std::size_t p = x.cols();
    NaiveBayesState s;
    s.kernel = kernel;

    std::array<std::vector<std::size_t>, 2> rows;
    for (std::size_t i = 0; i < y.size(); ++i) rows[y[i] == Label::Weak ? 1 : 0].push_back(i);
    const auto n = static_cast<double>(y.size());
    s.log_prior_good = std::log(static_cast<double>(rows[0].size()) / n);
    s.log_prior_weak = std::log(static_cast<double>(rows[1].size()) / n);

    double max_variance = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> column(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) column[i] = x(i, j);
        max_variance = std::max(max_variance, variance_of(column));
    }
    const double epsilon = 1e-9 * (max_variance + 1.0);

    for (int c = 0; c < 2; ++c) {
        s.mean[c].resize(p);
        s.variance[c].resize(p);
        if (kernel) {
            s.bandwidth[c].resize(p);
            s.samples[c] = FeatureMatrix(rows[c].size(), p);
        }
        for (std::size_t j = 0; j < p; ++j) {
            std::vector<double> values;
            for (std::size_t r : rows[c]) values.push_back(x(r, j));
            s.mean[c][j] = mean_of(values);
            s.variance[c][j] = variance_of(values) + epsilon;
            if (kernel) {
                s.bandwidth[c][j] = silverman_bandwidth(values);
                for (std::size_t i = 0; i < values.size(); ++i) s.samples[c](i, j) = values[i];
            }
        }
    }
    return s;
}

double score_naive_bayes(const NaiveBayesState& s, std::span<const double> row) {
    double log_joint[2] = {s.log_prior_good, s.log_prior_weak};
    for (int c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            log_joint[c] += s.kernel ? log_kde(row[j], s.samples[c], j, s.bandwidth[c][j])
                                     : log_gaussian(row[j], s.mean[c][j], s.variance[c][j]);
        }
    }
    return sigmoid(log_joint[1] - log_joint[0]);
}

}  // namespace ensel::detail
