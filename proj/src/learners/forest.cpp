#include <algorithm>
#include <numeric>

#include "ensel/random.hpp"
#include "internal.hpp"

namespace ensel::detail {

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double weighted_impurity = 0.0;
};

double gini_impurity(std::size_t weak, std::size_t total) {
    if (total == 0) return 0.0;
    const double p = static_cast<double>(weak) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const Label> y, int mtry, Rng& rng)
        : x_(x), y_(y), mtry_(static_cast<std::size_t>(mtry)), rng_(rng), features_(x.cols()) {
        std::iota(features_.begin(), features_.end(), std::size_t{0});
    }

    DecisionTree build(std::vector<std::size_t> sample) {
        DecisionTree tree;
        tree.nodes.emplace_back();
        struct Pending {
            int node;
            std::vector<std::size_t> rows;
        };
        std::vector<Pending> stack;
        stack.push_back({0, std::move(sample)});
        while (!stack.empty()) {
            Pending item = std::move(stack.back());
            stack.pop_back();

            std::size_t weak = 0;
            for (std::size_t r : item.rows) weak += y_[r] == Label::Weak ? 1 : 0;
            const std::size_t n = item.rows.size();
            // Majority vote, Weak on a tie.
            tree.nodes[item.node].vote = 2 * weak >= n ? Label::Weak : Label::Good;
            if (n < 2 || weak == 0 || weak == n) continue;

            const SplitChoice choice = best_split(item.rows, weak);
            if (choice.feature < 0) continue;

            std::vector<std::size_t> left;
            std::vector<std::size_t> right;
            for (std::size_t r : item.rows) {
                (x_(r, static_cast<std::size_t>(choice.feature)) <= choice.threshold ? left : right).push_back(r);
            }
            const int left_id = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            TreeNode& node = tree.nodes[item.node];
            node.feature = choice.feature;
            node.threshold = choice.threshold;
            node.left = left_id;
            node.right = left_id + 1;
            stack.push_back({left_id + 1, std::move(right)});
            stack.push_back({left_id, std::move(left)});
        }
        return tree;
    }

private:
    // Features are visited in a random order until mtry non-constant ones have
    // been evaluated; constant features do not count against mtry.
    SplitChoice best_split(const std::vector<std::size_t>& rows, std::size_t weak_total) {
        std::shuffle(features_.begin(), features_.end(), rng_);
        SplitChoice best;
        best.weighted_impurity = INFINITY;
        const std::size_t n = rows.size();
        std::size_t evaluated = 0;
        std::vector<std::pair<double, Label>> column(n);
        for (std::size_t f : features_) {
            if (evaluated == mtry_) break;
            for (std::size_t i = 0; i < n; ++i) column[i] = {x_(rows[i], f), y_[rows[i]]};
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (column.front().first == column.back().first) continue;
            ++evaluated;

            std::size_t weak_left = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                weak_left += column[i].second == Label::Weak ? 1 : 0;
                if (column[i].first == column[i + 1].first) continue;
                const std::size_t n_left = i + 1;
                const std::size_t n_right = n - n_left;
                const double impurity =
                    (static_cast<double>(n_left) * gini_impurity(weak_left, n_left) +
                     static_cast<double>(n_right) * gini_impurity(weak_total - weak_left, n_right)) /
                    static_cast<double>(n);
                if (impurity < best.weighted_impurity) {
                    best.weighted_impurity = impurity;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (column[i].first + column[i + 1].first);
                }
            }
        }
        return best;
    }

    const FeatureMatrix& x_;
    std::span<const Label> y_;
    std::size_t mtry_;
    Rng& rng_;
    std::vector<std::size_t> features_;
};

Label tree_vote(const DecisionTree& tree, std::span<const double> row) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& n = tree.nodes[static_cast<std::size_t>(node)];
        node = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[static_cast<std::size_t>(node)].vote;
}

}  // namespace

ForestState fit_forest(const FeatureMatrix& x, std::span<const Label> y, int mtry, int ntrees, std::uint64_t seed) {
    ForestState s;
    s.mtry = mtry;
    s.trees.reserve(static_cast<std::size_t>(ntrees));
    const std::size_t n = x.rows();
    for (int t = 0; t < ntrees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> sample(n);
        for (auto& r : sample) r = pick(rng);
        TreeBuilder builder(x, y, mtry, rng);
        s.trees.push_back(builder.build(std::move(sample)));
    }
    return s;
}

double score_forest(const ForestState& s, std::span<const double> row) {
    std::size_t weak = 0;
    for (const auto& tree : s.trees) weak += tree_vote(tree, row) == Label::Weak ? 1 : 0;
    return static_cast<double>(weak) / static_cast<double>(s.trees.size());
}

}  // namespace ensel::detail

namespace ensel {

std::vector<Label> forest_votes(const ForestState& state, std::span<const double> percent_marks) {
    std::vector<Label> votes;
    votes.reserve(state.trees.size());
    for (const auto& tree : state.trees) votes.push_back(detail::tree_vote(tree, percent_marks));
    return votes;
}

}  // namespace ensel
