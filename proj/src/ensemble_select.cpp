#include "ensel/ensemble_select.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ensel/error.hpp"
#include "ensel/parallel.hpp"

namespace ensel {

namespace {

constexpr std::size_t kAlgorithms = kAllAlgorithms.size();
constexpr unsigned kSubsets = (1u << kAlgorithms) - 1;

}  // namespace

unsigned membership_bits(const Membership& m) {
    unsigned bits = 0;
    for (std::size_t i = 0; i < kAlgorithms; ++i) {
        if (m[i]) bits |= 1u << (kAlgorithms - 1 - i);
    }
    return bits;
}

Membership membership_from_bits(unsigned bits) {
    Membership m{};
    for (std::size_t i = 0; i < kAlgorithms; ++i) m[i] = (bits >> (kAlgorithms - 1 - i)) & 1u;
    return m;
}

std::size_t member_count(const Membership& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), true)); }

std::string describe(const Membership& m) {
    std::string out;
    for (std::size_t i = 0; i < kAlgorithms; ++i) {
        if (!m[i]) continue;
        if (!out.empty()) out += '+';
        out += to_string(kAllAlgorithms[i]);
    }
    return out;
}

double average_gini(std::span<const double> g) {
    double sum = 0.0;
    for (double v : g) sum += v;
    return sum / static_cast<double>(g.size());
}

EnsembleRow make_row(const Membership& members, std::vector<double> g) {
    if (member_count(members) == 0) throw Error(ErrorKind::EmptyEnsemble, "an ensemble needs at least one member");
    if (g.empty()) throw Error(ErrorKind::InvalidArgument, "an ensemble row needs at least one split Gini");
    EnsembleRow row;
    row.members = members;
    row.avg = average_gini(g);
    row.g = std::move(g);
    return row;
}

ScoreVector combine_scores(std::span<const ScoreVector> members) {
    if (members.empty()) throw Error(ErrorKind::EmptyEnsemble, "cannot combine an empty ensemble");
    const std::size_t n = members.front().size();
    ScoreVector out(n, 0.0);
    for (const auto& m : members) {
        if (m.size() != n) throw Error(ErrorKind::LengthMismatch, "member score vectors differ in length");
        for (std::size_t i = 0; i < n; ++i) out[i] += m[i];
    }
    for (auto& v : out) v /= static_cast<double>(members.size());
    return out;
}

void sort_rows(std::vector<EnsembleRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const EnsembleRow& a, const EnsembleRow& b) {
        if (a.avg != b.avg) return a.avg > b.avg;
        if (a.p.value != b.p.value) return a.p.value < b.p.value;
        const auto ca = member_count(a.members);
        const auto cb = member_count(b.members);
        if (ca != cb) return ca < cb;
        return membership_bits(a.members) < membership_bits(b.members);
    });
}

SelectionTable build_table(std::span<const SplitScores> splits, std::size_t null_samples, std::uint64_t seed,
                           NullMode mode, unsigned threads) {
    if (splits.empty()) throw Error(ErrorKind::InvalidArgument, "no splits to build a selection table from");
    for (const auto& s : splits) {
        for (const auto& scores : s.by_algorithm) {
            if (scores.size() != s.labels.size()) {
                throw Error(ErrorKind::LengthMismatch, "a model's test scores do not match its split's labels");
            }
        }
    }

    SelectionTable table;
    table.master_seed = seed;
    table.null_samples = null_samples;
    table.null_mode = mode;
    table.rows.resize(kSubsets);
    parallel_for(kSubsets, threads, [&](std::size_t r) {
        const Membership members = membership_from_bits(static_cast<unsigned>(r + 1));
        std::vector<double> g;
        for (const auto& split : splits) {
            std::vector<ScoreVector> chosen;
            for (std::size_t a = 0; a < kAlgorithms; ++a) {
                if (members[a]) chosen.push_back(split.by_algorithm[a]);
            }
            g.push_back(gini(combine_scores(chosen), split.labels));
        }
        table.rows[r] = make_row(members, std::move(g));
    });

    std::vector<LabelCounts> counts;
    for (const auto& split : splits) {
        counts.push_back(count_labels(split.labels));
        if (mode == NullMode::Initial) break;
    }
    const auto null = NullDistribution::sample(counts, null_samples, seed, threads);
    for (auto& row : table.rows) row.p = null.p_value(mode == NullMode::Initial ? row.g.front() : row.avg);

    sort_rows(table.rows);
    return table;
}

std::string_view to_string(Rationale r) {
    return r == Rationale::TopAvg ? "TopAvg" : "TopAvgAfterExclusion";
}

SelectionDecision select_best(const SelectionTable& table, double alpha, std::span<const AlgorithmId> exclusions) {
    if (table.rows.empty()) throw Error(ErrorKind::InvalidArgument, "empty selection table");
    for (const auto& row : table.rows) {
        const bool excluded = std::any_of(exclusions.begin(), exclusions.end(), [&](AlgorithmId id) {
            return row.members[static_cast<std::size_t>(id)];
        });
        if (excluded || row.p.value > alpha) continue;
        SelectionDecision d;
        d.chosen = row;
        d.rationale = exclusions.empty() ? Rationale::TopAvg : Rationale::TopAvgAfterExclusion;
        d.exclusions.assign(exclusions.begin(), exclusions.end());
        return d;
    }
    throw Error(ErrorKind::NoSignificantEnsemble,
                fmt::format("no ensemble reaches p <= {} after exclusions", alpha));
}

std::string table_csv(const SelectionTable& table) {
    std::string out;
    for (AlgorithmId id : kAllAlgorithms) out += fmt::format("{},", column_name(id));
    const std::size_t n_splits = table.rows.empty() ? 0 : table.rows.front().g.size();
    for (std::size_t s = 0; s < n_splits; ++s) out += s == 0 ? "G," : fmt::format("G{},", s);
    out += "Avg,p\n";
    for (const auto& row : table.rows) {
        for (bool m : row.members) out += m ? "1," : "0,";
        for (double g : row.g) out += fmt::format("{:.6f},", g);
        out += fmt::format("{:.6f},{:.6g}\n", row.avg, row.p.value);
    }
    return out;
}

}  // namespace ensel
