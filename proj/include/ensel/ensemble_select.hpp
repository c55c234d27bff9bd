#pragma once

// Every non-empty subset of the six classifiers is scored by its Gini on each
// split's test set; rows are ranked by the average and given a Monte-Carlo p-value.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ensel/learners.hpp"
#include "ensel/metrics.hpp"

namespace ensel {

using Membership = std::array<bool, kAllAlgorithms.size()>;

/// Bits in column order with RF as the most significant bit.
unsigned membership_bits(const Membership& m);
Membership membership_from_bits(unsigned bits);
std::size_t member_count(const Membership& m);

struct EnsembleRow {
    Membership members{};
    std::vector<double> g;  // G (initial split), G1, G2, ...
    double avg = 0.0;
    PValue p;
};

/// Arithmetic mean summed in split order; the same routine fills and audits `avg`.
double average_gini(std::span<const double> g);

EnsembleRow make_row(const Membership& members, std::vector<double> g);

/// Element-wise mean of member probability scores.
ScoreVector combine_scores(std::span<const ScoreVector> members);

/// Test-set scores of the six tuned models on one split, in AlgorithmId order.
struct SplitScores {
    std::array<ScoreVector, kAllAlgorithms.size()> by_algorithm;
    std::vector<Label> labels;
};

/// Average: p of Avg against the null of the average Gini over all splits.
/// Initial: p of G against the null of the initial split alone.
enum class NullMode { Average, Initial };

struct SelectionTable {
    std::vector<EnsembleRow> rows;  // 63 rows, best first
    std::uint64_t master_seed = 0;
    std::size_t null_samples = 0;
    NullMode null_mode = NullMode::Average;
};

SelectionTable build_table(std::span<const SplitScores> splits, std::size_t null_samples, std::uint64_t seed,
                           NullMode mode = NullMode::Average, unsigned threads = 1);

/// Order: avg descending, p ascending, fewer members, then membership bits ascending.
void sort_rows(std::vector<EnsembleRow>& rows);

enum class Rationale { TopAvg, TopAvgAfterExclusion };
std::string_view to_string(Rationale r);

struct SelectionDecision {
    EnsembleRow chosen;
    Rationale rationale = Rationale::TopAvg;
    std::vector<AlgorithmId> exclusions;
};

inline constexpr double kDefaultAlpha = 0.05;

/// First row without an excluded algorithm whose p <= alpha.
/// Throws NoSignificantEnsemble when there is none.
SelectionDecision select_best(const SelectionTable& table, double alpha, std::span<const AlgorithmId> exclusions = {});

/// Header `rf,mlp,bn,knn,lreg,svm,G,G1,G2,G3,G4,G5,Avg,p` (for six splits).
std::string table_csv(const SelectionTable& table);

std::string describe(const Membership& m);

}  // namespace ensel
