#include <algorithm>
#include <cmath>

#include "ensel/random.hpp"
#include "internal.hpp"

namespace ensel::detail {

namespace {

constexpr double kLearningRate = 0.1;
constexpr std::size_t kMaxEpochs = 2000;
constexpr double kGradientTolerance = 1e-6;

struct Forward {
    std::vector<double> hidden;
    double output = 0.0;
};

void forward(const MlpState& s, std::span<const double> row, Forward& f) {
    f.hidden.resize(s.hidden);
    double z_out = s.b2;
    for (std::size_t h = 0; h < s.hidden; ++h) {
        double z = s.b1[h];
        for (std::size_t j = 0; j < s.inputs; ++j) z += s.w1[h * s.inputs + j] * row[j] / 100.0;
        f.hidden[h] = sigmoid(z);
        z_out += s.w2[h] * f.hidden[h];
    }
    f.output = sigmoid(z_out);
}

}  // namespace

// One hidden layer of logistic units, logistic output, mean cross-entropy,
// full-batch gradient descent.
MlpState fit_mlp(const FeatureMatrix& x, std::span<const Label> y, int neurons, std::uint64_t seed, FitInfo& info) {
    const std::size_t n = x.rows();
    MlpState s;
    s.inputs = x.cols();
    s.hidden = static_cast<std::size_t>(neurons);

    Rng rng(seed);
    std::uniform_real_distribution<double> init(-0.5, 0.5);
    s.w1.resize(s.hidden * s.inputs);
    for (auto& w : s.w1) w = init(rng);
    s.b1.resize(s.hidden);
    for (auto& w : s.b1) w = init(rng);
    s.w2.resize(s.hidden);
    for (auto& w : s.w2) w = init(rng);
    s.b2 = init(rng);

    std::vector<double> g_w1(s.w1.size());
    std::vector<double> g_b1(s.hidden);
    std::vector<double> g_w2(s.hidden);
    Forward f;
    info.converged = false;
    for (std::size_t epoch = 0; epoch < kMaxEpochs; ++epoch) {
        std::fill(g_w1.begin(), g_w1.end(), 0.0);
        std::fill(g_b1.begin(), g_b1.end(), 0.0);
        std::fill(g_w2.begin(), g_w2.end(), 0.0);
        double g_b2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = x.row(i);
            forward(s, row, f);
            // d(cross-entropy)/d(output pre-activation)
            const double delta_out = f.output - weak_target(y[i]);
            g_b2 += delta_out;
            for (std::size_t h = 0; h < s.hidden; ++h) {
                g_w2[h] += delta_out * f.hidden[h];
                const double delta_h = delta_out * s.w2[h] * f.hidden[h] * (1.0 - f.hidden[h]);
                g_b1[h] += delta_h;
                for (std::size_t j = 0; j < s.inputs; ++j) g_w1[h * s.inputs + j] += delta_h * row[j] / 100.0;
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        double max_abs = std::abs(g_b2) * inv_n;
        for (double g : g_w1) max_abs = std::max(max_abs, std::abs(g) * inv_n);
        for (double g : g_b1) max_abs = std::max(max_abs, std::abs(g) * inv_n);
        for (double g : g_w2) max_abs = std::max(max_abs, std::abs(g) * inv_n);
        info.iterations = epoch + 1;
        if (max_abs < kGradientTolerance) {
            info.converged = true;
            break;
        }
        for (std::size_t k = 0; k < s.w1.size(); ++k) s.w1[k] -= kLearningRate * g_w1[k] * inv_n;
        for (std::size_t h = 0; h < s.hidden; ++h) {
            s.b1[h] -= kLearningRate * g_b1[h] * inv_n;
            s.w2[h] -= kLearningRate * g_w2[h] * inv_n;
        }
        s.b2 -= kLearningRate * g_b2 * inv_n;
    }
    return s;
}

double score_mlp(const MlpState& s, std::span<const double> row) {
    Forward f;
    forward(s, row, f);
    return f.output;
}

}  // namespace ensel::detail
