#include <algorithm>
#include <cmath>

#include "ensel/random.hpp"
#include "internal.hpp"

namespace ensel::detail {

namespace {

constexpr double kTolerance = 1e-3;
constexpr std::size_t kMaxQuietPasses = 100;
// Hard stop for pathological inputs; reaching it marks the model unconverged.
constexpr std::size_t kMaxSweeps = 20000;
constexpr double kAlphaEpsilon = 1e-5;

double rbf(std::span<const double> a, std::span<const double> b, double sigma) {
    return std::exp(-sigma * squared_distance(a, b));
}

FeatureMatrix scaled(const FeatureMatrix& x) {
    FeatureMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) / 100.0;
    }
    return out;
}

}  // namespace

// Simplified SMO: sweep over all multipliers, pair each KKT violator with a
// random partner, stop after kMaxQuietPasses consecutive sweeps without change.
SvmState fit_svm(const FeatureMatrix& x, std::span<const Label> y, double c, double sigma, std::uint64_t seed,
                 FitInfo& info) {
    const std::size_t n = x.rows();
    const FeatureMatrix xs = scaled(x);

    std::vector<double> kernel(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double k = rbf(xs.row(i), xs.row(j), sigma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    auto K = [&](std::size_t i, std::size_t j) { return kernel[i * n + j]; };

    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = y[i] == Label::Weak ? 1.0 : -1.0;

    std::vector<double> alpha(n, 0.0);
    std::vector<double> output(n, 0.0);  // sum_k alpha_k y_k K(k, i), without bias
    double b = 0.0;

    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> partner(0, n - 2);

    std::size_t quiet = 0;
    std::size_t sweeps = 0;
    while (quiet < kMaxQuietPasses && sweeps < kMaxSweeps) {
        ++sweeps;
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = output[i] + b - target[i];
            const bool violates = (target[i] * ei < -kTolerance && alpha[i] < c) ||
                                  (target[i] * ei > kTolerance && alpha[i] > 0.0);
            if (!violates) continue;

            std::size_t j = partner(rng);
            if (j >= i) ++j;
            const double ej = output[j] + b - target[j];
            const double ai_old = alpha[i];
            const double aj_old = alpha[j];

            double lo = 0.0;
            double hi = 0.0;
            if (target[i] != target[j]) {
                lo = std::max(0.0, aj_old - ai_old);
                hi = std::min(c, c + aj_old - ai_old);
            } else {
                lo = std::max(0.0, ai_old + aj_old - c);
                hi = std::min(c, ai_old + aj_old);
            }
            if (lo == hi) continue;
            const double eta = 2.0 * K(i, j) - K(i, i) - K(j, j);
            if (eta >= 0.0) continue;

            double aj = std::clamp(aj_old - target[j] * (ei - ej) / eta, lo, hi);
            if (std::abs(aj - aj_old) < kAlphaEpsilon) continue;
            const double ai = ai_old + target[i] * target[j] * (aj_old - aj);

            const double di = target[i] * (ai - ai_old);
            const double dj = target[j] * (aj - aj_old);
            const double b1 = b - ei - di * K(i, i) - dj * K(i, j);
            const double b2 = b - ej - di * K(i, j) - dj * K(j, j);
            if (ai > 0.0 && ai < c) b = b1;
            else if (aj > 0.0 && aj < c) b = b2;
            else b = 0.5 * (b1 + b2);

            alpha[i] = ai;
            alpha[j] = aj;
            for (std::size_t k = 0; k < n; ++k) output[k] += di * K(i, k) + dj * K(j, k);
            ++changed;
        }
        quiet = changed == 0 ? quiet + 1 : 0;
    }
    info.converged = quiet >= kMaxQuietPasses;
    info.iterations = sweeps;

    SvmState s;
    s.c = c;
    s.sigma = sigma;
    s.bias = b;
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) support.push_back(i);
    }
    s.support = FeatureMatrix(support.size(), x.cols());
    for (std::size_t r = 0; r < support.size(); ++r) {
        std::copy_n(xs.row(support[r]).begin(), x.cols(), s.support.row(r).begin());
        s.coef.push_back(alpha[support[r]] * target[support[r]]);
    }

    std::vector<double> margins(n);
    for (std::size_t i = 0; i < n; ++i) {
        double f = b;
        for (std::size_t r = 0; r < support.size(); ++r) f += s.coef[r] * K(support[r], i);
        margins[i] = f;
    }
    s.platt = platt_calibrate(margins, y);
    return s;
}

double score_svm(const SvmState& s, std::span<const double> row) {
    return platt_probability(s.platt, svm_margin(s, row));
}

}  // namespace ensel::detail

namespace ensel {

double svm_margin(const SvmState& state, std::span<const double> percent_marks) {
    std::vector<double> x(percent_marks.begin(), percent_marks.end());
    for (auto& v : x) v /= 100.0;
    double f = state.bias;
    for (std::size_t r = 0; r < state.coef.size(); ++r) {
        f += state.coef[r] * std::exp(-state.sigma * squared_distance(state.support.row(r), x));
    }
    return f;
}

// Newton iterations with backtracking on the regularized-target log-loss
// (Platt 1999, as refined by Lin, Lin and Weng 2007).
PlattFit platt_calibrate(std::span<const double> margins, std::span<const Label> labels) {
    PlattFit fit;
    if (!margins.empty()) {
        const auto [lo, hi] = std::minmax_element(margins.begin(), margins.end());
        fit.min_margin = *lo;
        fit.max_margin = *hi;
    }
    auto fall_back = [&] {
        fit.fallback = true;
        fit.a = 0.0;
        fit.b = 0.0;
        return fit;
    };
    if (!(fit.max_margin > fit.min_margin)) return fall_back();

    double n_pos = 0.0;
    double n_neg = 0.0;
    for (Label l : labels) (l == Label::Weak ? n_pos : n_neg) += 1.0;
    if (n_pos == 0.0 || n_neg == 0.0) return fall_back();

    const double hi_target = (n_pos + 1.0) / (n_pos + 2.0);
    const double lo_target = 1.0 / (n_neg + 2.0);
    std::vector<double> t(margins.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = labels[i] == Label::Weak ? hi_target : lo_target;

    auto objective = [&](double a, double b) {
        double f = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double z = margins[i] * a + b;
            f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return f;
    };

    constexpr int kMaxIter = 100;
    constexpr double kMinStep = 1e-10;
    constexpr double kRidge = 1e-12;
    double a = 0.0;
    double b = std::log((n_neg + 1.0) / (n_pos + 1.0));
    double fval = objective(a, b);
    bool ok = false;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        double h11 = kRidge;
        double h22 = kRidge;
        double h21 = 0.0;
        double g1 = 0.0;
        double g2 = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double z = margins[i] * a + b;
            double p = 0.0;
            double q = 0.0;
            if (z >= 0.0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d2 = p * q;
            h11 += margins[i] * margins[i] * d2;
            h22 += d2;
            h21 += margins[i] * d2;
            const double d1 = t[i] - p;
            g1 += margins[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) {
            ok = true;
            break;
        }
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= kMinStep) {
            const double na = a + step * da;
            const double nb = b + step * db;
            const double nf = objective(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < kMinStep) break;
    }
    // Scores must increase with the margin (Weak on the positive side).
    if (!ok || !std::isfinite(a) || !std::isfinite(b) || !(a < 0.0)) return fall_back();
    fit.a = a;
    fit.b = b;
    return fit;
}

double platt_probability(const PlattFit& fit, double margin) {
    if (fit.fallback) {
        if (!(fit.max_margin > fit.min_margin)) return 0.5;
        return std::clamp((margin - fit.min_margin) / (fit.max_margin - fit.min_margin), 0.0, 1.0);
    }
    return detail::sigmoid(-(fit.a * margin + fit.b));
}

}  // namespace ensel
