#pragma once

#include <cstddef>
#include <cstdint>

#include "ensel/data_model.hpp"

namespace ensel {

/// Seeded generator of labeled grade tables with known ground truth.
struct SynthSpec {
    std::size_t n_students = 200;
    std::size_t n_features = 9;
    double weak_fraction = 0.4;
    /// Gap between class means on signal features, in within-class standard deviations.
    double separation = 2.0;
    std::size_t n_signal_features = 3;
    /// Shape of the skew-normal final-grade distribution (0 = normal).
    double skew = 0.0;
    std::uint64_t seed = 1;
    Stage stage = Stage::Stage20;
};

/// round_half_up(weak_fraction * n_students).
std::size_t synth_weak_count(const SynthSpec& spec);

/// Throws InvalidSpec when these settings cannot produce at least 2 students of each label.
void validate(const SynthSpec& spec);

/// Percent marks (max 100) and final grades, labels exact per synth_weak_count.
RawDataset generate_raw(const SynthSpec& spec);

Dataset generate(const SynthSpec& spec);

}  // namespace ensel
