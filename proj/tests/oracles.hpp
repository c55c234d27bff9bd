#pragma once

// Brute-force reference implementations used by the tests.

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ensel/data_model.hpp"

namespace oracle {

/// Pairwise Mann-Whitney: every Weak x Good pair, half credit for ties.
inline double pairwise_gini(std::span<const double> s, std::span<const ensel::Label> y) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != ensel::Label::Weak) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != ensel::Label::Good) continue;
            pairs += 1.0;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return 2.0 * wins / pairs - 1.0;
}

struct Counts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Counts count(std::span<const double> s, std::span<const ensel::Label> y, double tau) {
    Counts c;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool pred_weak = !(s[i] < tau);
        const bool weak = y[i] == ensel::Label::Weak;
        if (pred_weak && weak) ++c.tp;
        if (pred_weak && !weak) ++c.fp;
        if (!pred_weak && !weak) ++c.tn;
        if (!pred_weak && weak) ++c.fn;
    }
    return c;
}

/// Random scores with ties drawn from a small grid half of the time; both labels present.
inline void random_instance(std::mt19937_64& rng, std::size_t n, std::vector<double>& s,
                            std::vector<ensel::Label>& y) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool coarse = u(rng) < 0.5;
    s.assign(n, 0.0);
    y.assign(n, ensel::Label::Good);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = coarse ? std::floor(u(rng) * 5.0) / 4.0 : u(rng);
        y[i] = u(rng) < 0.4 ? ensel::Label::Weak : ensel::Label::Good;
    }
    y[0] = ensel::Label::Weak;
    y[1] = ensel::Label::Good;
}

}  // namespace oracle
