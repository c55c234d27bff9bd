#include "ensel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ensel/error.hpp"
#include "ensel/parallel.hpp"
#include "ensel/random.hpp"

namespace ensel {

namespace {

void check_lengths(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) {
        throw Error(ErrorKind::LengthMismatch,
                    fmt::format("{} scores for {} labels", scores.size(), labels.size()));
    }
}

// Sum of the (average) ranks of Weak rows; ranks start at 1.
double weak_rank_sum(std::span<const double> scores, std::span<const Label> labels, std::vector<std::size_t>& order) {
    const std::size_t n = scores.size();
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t weak_in_group = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] == Label::Weak) ++weak_in_group;
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        rank_sum += avg_rank * static_cast<double>(weak_in_group);
        i = j;
    }
    return rank_sum;
}

// Mann-Whitney U of the Weak rows and the pair count; both are exact multiples of 0.5.
std::pair<double, double> mann_whitney(std::span<const double> scores, std::span<const Label> labels,
                                       std::vector<std::size_t>& order) {
    const auto counts = count_labels(labels);
    if (counts.weak == 0 || counts.good == 0) {
        throw Error(ErrorKind::SingleClassSample, "AUC needs both Weak and Good students");
    }
    const double nw = static_cast<double>(counts.weak);
    const double ng = static_cast<double>(counts.good);
    return {weak_rank_sum(scores, labels, order) - nw * (nw + 1.0) / 2.0, nw * ng};
}

double gini_with_buffer(std::span<const double> scores, std::span<const Label> labels,
                        std::vector<std::size_t>& order) {
    const auto [u, pairs] = mann_whitney(scores, labels, order);
    return (2.0 * u - pairs) / pairs;
}

}  // namespace

LabelCounts count_labels(std::span<const Label> labels) {
    LabelCounts c;
    for (Label l : labels) (l == Label::Weak ? c.weak : c.good)++;
    return c;
}

double auc(std::span<const double> scores, std::span<const Label> labels) {
    check_lengths(scores, labels);
    std::vector<std::size_t> order;
    const auto [u, pairs] = mann_whitney(scores, labels, order);
    return u / pairs;
}

double gini(std::span<const double> scores, std::span<const Label> labels) {
    check_lengths(scores, labels);
    std::vector<std::size_t> order;
    return gini_with_buffer(scores, labels, order);
}

CapCurve cap_curve(std::span<const double> scores, std::span<const Label> labels) {
    check_lengths(scores, labels);
    const auto counts = count_labels(labels);
    if (counts.weak == 0 || counts.good == 0) {
        throw Error(ErrorKind::SingleClassSample, "CAP curve needs both Weak and Good students");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    CapCurve curve;
    curve.reserve(n + 1);
    curve.push_back({0.0, 0.0});
    std::size_t captured = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[order[i]] == Label::Weak) ++captured;
        curve.push_back({static_cast<double>(i + 1) / static_cast<double>(n),
                         static_cast<double>(captured) / static_cast<double>(counts.weak)});
    }
    return curve;
}

double cap_area(const CapCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const double dx = curve[i].fraction_of_students - curve[i - 1].fraction_of_students;
        area += dx * 0.5 * (curve[i].fraction_of_weak + curve[i - 1].fraction_of_weak);
    }
    return area;
}

std::string cap_csv(const CapCurve& curve) {
    std::string out = "fraction_of_students,fraction_of_weak\n";
    for (const auto& p : curve) out += fmt::format("{},{}\n", p.fraction_of_students, p.fraction_of_weak);
    return out;
}

// ---------------------------------------------------------------------------
// Monte-Carlo null

NullDistribution NullDistribution::sample(std::span<const LabelCounts> test_sets, std::size_t samples,
                                          std::uint64_t seed, unsigned threads) {
    if (samples < 1) throw Error(ErrorKind::InvalidArgument, "null sample count must be at least 1");
    if (test_sets.empty()) throw Error(ErrorKind::InvalidArgument, "no test sets for the null distribution");
    for (const auto& c : test_sets) {
        if (c.weak == 0 || c.good == 0) {
            throw Error(ErrorKind::SingleClassSample, "every test set needs both labels");
        }
    }

    std::vector<std::vector<Label>> label_sets;
    for (const auto& c : test_sets) {
        std::vector<Label> labels(c.weak, Label::Weak);
        labels.resize(c.weak + c.good, Label::Good);
        label_sets.push_back(std::move(labels));
    }

    NullDistribution dist;
    dist.seed_ = seed;
    dist.sorted_.resize(samples);
    const std::size_t n_chunks = (samples + kChunk - 1) / kChunk;
    parallel_for(n_chunks, threads, [&](std::size_t chunk) {
        Rng rng(derive_seed(seed, chunk));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> scores;
        std::vector<std::size_t> order;
        const std::size_t begin = chunk * kChunk;
        const std::size_t end = std::min(samples, begin + kChunk);
        for (std::size_t r = begin; r < end; ++r) {
            double sum = 0.0;
            for (const auto& labels : label_sets) {
                scores.resize(labels.size());
                for (auto& s : scores) s = normal(rng);
                sum += gini_with_buffer(scores, labels, order);
            }
            dist.sorted_[r] = sum / static_cast<double>(label_sets.size());
        }
    });
    std::sort(dist.sorted_.begin(), dist.sorted_.end());
    return dist;
}

PValue NullDistribution::p_value(double observed) const {
    const auto first = std::lower_bound(sorted_.begin(), sorted_.end(), observed - 1e-12);
    const auto at_least = static_cast<double>(sorted_.end() - first);
    return PValue{(1.0 + at_least) / (static_cast<double>(sorted_.size()) + 1.0), sorted_.size(), seed_};
}

PValue mc_pvalue(double observed_avg, const std::vector<std::vector<Label>>& test_label_sets, std::size_t samples,
                 std::uint64_t seed, unsigned threads) {
    std::vector<LabelCounts> counts;
    for (const auto& labels : test_label_sets) counts.push_back(count_labels(labels));
    return NullDistribution::sample(counts, samples, seed, threads).p_value(observed_avg);
}

// ---------------------------------------------------------------------------

ConfusionMetrics confusion_metrics(std::span<const double> scores, std::span<const Label> labels, double tau) {
    check_lengths(scores, labels);
    if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must lie in [0,1]");
    ConfusionMetrics m;
    m.tau = tau;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted_weak = scores[i] >= tau;
        const bool weak = labels[i] == Label::Weak;
        if (predicted_weak && weak) ++m.tp;
        else if (predicted_weak) ++m.fp;
        else if (weak) ++m.fn;
        else ++m.tn;
    }
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.accuracy = ratio(m.tp + m.tn, scores.size());
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.sensitivity = ratio(m.tp, m.tp + m.fn);
    m.specificity = ratio(m.tn, m.tn + m.fp);
    if (m.precision && m.sensitivity && (*m.precision + *m.sensitivity) > 0.0) {
        m.f_measure = 2.0 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
    }
    return m;
}

}  // namespace ensel
