#include <algorithm>
#include <numeric>
#include <utility>

#include "internal.hpp"

namespace ensel::detail {

KnnState fit_knn(const FeatureMatrix& x, std::span<const Label> y, int k) {
    return KnnState{k, x, std::vector<Label>(y.begin(), y.end())};
}

// Fraction of Weak among the k nearest stored points. Equal distances go to the
// earlier stored row (rows are stored in ascending student index). When fewer
// than k points are stored, all of them vote.
double score_knn(const KnnState& s, std::span<const double> row) {
    const std::size_t n = s.points.rows();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(s.k), n);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = {squared_distance(s.points.row(i), row), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t weak = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (s.labels[dist[i].second] == Label::Weak) ++weak;
    }
    return static_cast<double>(weak) / static_cast<double>(k);
}

}  // namespace ensel::detail
