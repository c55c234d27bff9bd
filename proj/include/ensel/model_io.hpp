#pragma once

#include <string>
#include <string_view>

#include "ensel/learners.hpp"

namespace ensel {

inline constexpr int kModelFormatVersion = 1;

/// Self-describing JSON dump of a fitted model (algorithm, params, fitted arrays).
/// Doubles are written with round-trip precision, so load(dump(m)) scores identically.
std::string dump_model(const TrainedModel& model);
TrainedModel load_model(std::string_view text);

}  // namespace ensel
