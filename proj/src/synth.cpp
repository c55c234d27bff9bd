#include "ensel/synth.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ensel/error.hpp"
#include "ensel/random.hpp"

namespace ensel {

namespace {

constexpr double kGoodMean = 70.0;
constexpr double kClassSd = 12.0;
constexpr double kNoiseMean = 60.0;
constexpr double kNoiseSd = 15.0;
constexpr double kGradeLocation = 65.0;
constexpr double kGradeScale = 15.0;

// Skew-normal draw, then rejection into [lo, hi]; uniform on the range if the
// class interval sits far in a tail.
double final_grade(Rng& rng, double skew, int lo, int hi) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double delta = skew / std::sqrt(1.0 + skew * skew);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double u0 = normal(rng);
        const double u1 = normal(rng);
        const double z = delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1;
        const auto g = round_half_up(kGradeLocation + kGradeScale * z);
        if (g >= lo && g <= hi) return static_cast<double>(g);
    }
    return static_cast<double>(std::uniform_int_distribution<int>(lo, hi)(rng));
}

}  // namespace

std::size_t synth_weak_count(const SynthSpec& spec) {
    return static_cast<std::size_t>(round_half_up(spec.weak_fraction * static_cast<double>(spec.n_students)));
}

void validate(const SynthSpec& spec) {
    auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidSpec, why); };
    if (!(spec.weak_fraction > 0.0 && spec.weak_fraction < 1.0)) fail("weak_fraction must lie in (0,1)");
    if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation)) fail("separation must be >= 0");
    if (spec.n_features == 0) fail("at least one feature is required");
    if (spec.n_signal_features > spec.n_features) fail("more signal features than features");
    if (!std::isfinite(spec.skew)) fail("skew must be finite");
    const std::size_t weak = synth_weak_count(spec);
    if (weak < 2 || spec.n_students < weak + 2) fail("spec implies fewer than 2 students of some label");
}

RawDataset generate_raw(const SynthSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    const std::size_t n = spec.n_students;
    const std::size_t n_weak = synth_weak_count(spec);

    std::vector<Label> labels(n, Label::Good);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_weak), Label::Weak);
    std::shuffle(labels.begin(), labels.end(), rng);

    RawDataset raw;
    raw.feature_max.assign(spec.n_features, 100.0);
    for (std::size_t j = 0; j < spec.n_features; ++j) raw.feature_names.push_back(fmt::format("F{}", j + 1));

    std::normal_distribution<double> normal(0.0, 1.0);
    const int id_width = std::max(3, static_cast<int>(std::to_string(n - 1).size()));
    for (std::size_t i = 0; i < n; ++i) {
        raw.student_ids.push_back(fmt::format("std{:0{}}", i, id_width));
        const bool weak = labels[i] == Label::Weak;
        std::vector<std::optional<double>> row;
        for (std::size_t j = 0; j < spec.n_features; ++j) {
            double mark = 0.0;
            if (j < spec.n_signal_features) {
                const double mean = weak ? kGoodMean - spec.separation * kClassSd : kGoodMean;
                mark = mean + kClassSd * normal(rng);
            } else {
                mark = kNoiseMean + kNoiseSd * normal(rng);
            }
            row.emplace_back(static_cast<double>(round_half_up(std::clamp(mark, 0.0, 100.0))));
        }
        raw.raw_marks.push_back(std::move(row));
        raw.final_grade.push_back(weak ? final_grade(rng, spec.skew, 0, 59) : final_grade(rng, spec.skew, 60, 100));
    }
    return raw;
}

Dataset generate(const SynthSpec& spec) { return preprocess(generate_raw(spec), spec.stage); }

}  // namespace ensel
