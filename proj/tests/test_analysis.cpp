#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ensel/analysis.hpp"
#include "ensel/error.hpp"
#include "ensel/synth.hpp"

using namespace ensel;

namespace {

Dataset from_points(const std::vector<std::array<int, 2>>& pts, const std::vector<Label>& labels) {
    Dataset ds;
    ds.feature_names = {"x", "y"};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ds.student_ids.push_back("p" + std::to_string(i));
        ds.marks.push_back({pts[i][0], pts[i][1]});
        ds.labels.push_back(labels[i]);
    }
    return ds;
}

TrainIndices everyone(const Dataset& ds) { return TrainIndices{all_indices(ds)}; }

void clusters(std::mt19937_64& rng, std::vector<std::array<int, 2>>& pts, std::vector<Label>& labels, int cx, int cy,
              Label label, int n) {
    std::normal_distribution<double> noise(0.0, 4.0);
    for (int i = 0; i < n; ++i) {
        pts.push_back({static_cast<int>(std::lround(std::clamp(cx + noise(rng), 0.0, 100.0))),
                       static_cast<int>(std::lround(std::clamp(cy + noise(rng), 0.0, 100.0)))});
        labels.push_back(label);
    }
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("pca invariants on synthetic marks") {
    SynthSpec spec;
    spec.n_students = 150;
    spec.seed = 21;
    const auto ds = generate(spec);
    const auto r = pca(ds);
    const std::size_t p = r.feature_names.size();
    REQUIRE(p == 9);
    const double total = std::accumulate(r.explained_variance_pct.begin(), r.explained_variance_pct.end(), 0.0);
    CHECK(std::abs(total - 100.0) < 1e-9);
    for (std::size_t k = 1; k < p; ++k) CHECK(r.explained_variance_pct[k] <= r.explained_variance_pct[k - 1]);

    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < p; ++j) dot += r.loadings(a, j) * r.loadings(b, j);
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-9);
        }
        std::size_t big = 0;
        for (std::size_t j = 1; j < p; ++j) {
            if (std::abs(r.loadings(a, j)) > std::abs(r.loadings(a, big))) big = j;
        }
        CHECK(r.loadings(a, big) > 0.0);
    }

    const auto x = feature_matrix(ds, all_indices(ds));
    const auto z = standardized(r, x, ds.feature_names);
    for (std::size_t k = 0; k < p; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) mean += r.scores(i, k);
        CHECK(std::abs(mean / static_cast<double>(ds.size())) < 1e-9);
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto proj = r.project(x.row(i));
        for (std::size_t j = 0; j < p; ++j) {
            double back = 0.0;
            for (std::size_t k = 0; k < p; ++k) back += r.scores(i, k) * r.loadings(k, j);
            CHECK(std::abs(back - z(i, j)) < 1e-9);
            CHECK(std::abs(proj[j] - r.scores(i, j)) < 1e-9);
        }
    }
}

TEST_CASE("rank-one data puts everything on the first component") {
    FeatureMatrix x(30, 3);
    for (std::size_t i = 0; i < 30; ++i) {
        const double t = static_cast<double>(i * 3 % 31);
        x(i, 0) = t;
        x(i, 1) = 2.0 * t + 1.0;
        x(i, 2) = 100.0 - t;
    }
    const auto r = pca_matrix(x, {"a", "b", "c"});
    CHECK(r.explained_variance_pct[0] == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.explained_variance_pct[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("constant columns are dropped; fewer than two usable features is an error") {
    FeatureMatrix x(10, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        x(i, 0) = 5;
        x(i, 1) = static_cast<double>(i);
        x(i, 2) = static_cast<double>(i * i);
    }
    const auto r = pca_matrix(x, {"const", "lin", "sq"});
    CHECK(r.dropped_features == std::vector<std::string>{"const"});
    CHECK(r.feature_names.size() == 2);

    FeatureMatrix one(10, 2);
    for (std::size_t i = 0; i < 10; ++i) {
        one(i, 0) = 7;
        one(i, 1) = static_cast<double>(i);
    }
    try {
        pca_matrix(one, {"const", "lin"});
        FAIL("expected DegenerateData");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateData);
    }
}

TEST_CASE("isotropic data splits variance evenly") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    FeatureMatrix x(4000, 2);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        x(i, 0) = n(rng);
        x(i, 1) = 3.0 * n(rng) + 10.0;
    }
    const auto r = pca_matrix(x, {"a", "b"});
    CHECK(std::abs(r.explained_variance_pct[0] - 50.0) < 3.0);
    CHECK(std::abs(r.explained_variance_pct[1] - 50.0) < 3.0);
}

TEST_CASE("permutation importance") {
    SynthSpec spec;
    spec.n_students = 200;
    spec.n_features = 4;
    spec.n_signal_features = 1;
    spec.separation = 2.5;
    spec.seed = 13;
    const auto ds = generate(spec);
    const auto split = stratified_split(ds, 0.7, 2);
    const auto model = train(AlgorithmId::LREG, {AlgorithmId::LREG, {}}, ds, split.train, 1);
    const auto ranking = permutation_importance(model, ds, split.test, 30, 9);
    REQUIRE(ranking.size() == 4);
    CHECK(ranking.front().first == "F1");
    for (std::size_t i = 1; i < ranking.size(); ++i) CHECK(ranking[i].second <= ranking[i - 1].second);
    for (const auto& [name, value] : ranking) {
        CHECK(value >= 0.0);
        if (name != "F1") CHECK(value < 0.05);
    }
    CHECK(permutation_importance(model, ds, split.test, 30, 9, 3) == ranking);

    auto blind = model;
    std::get<LogisticState>(blind.state).weights[2] = 0.0;
    const auto blind_rank = permutation_importance(blind, ds, split.test, 10, 1);
    for (const auto& [name, value] : blind_rank) {
        if (name == "F3") CHECK(value == 0.0);
    }

    try {
        permutation_importance(model, ds, split.test, 0, 1);
        FAIL("expected InvalidRepeats");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidRepeats);
    }
    TestIndices good_only;
    for (auto i : split.test) {
        if (ds.labels[i] == Label::Good) good_only.values.push_back(i);
    }
    CHECK_THROWS_AS(permutation_importance(model, ds, good_only, 3, 1), Error);
}

TEST_CASE("decision grid on separated clusters") {
    std::mt19937_64 rng(3);
    std::vector<std::array<int, 2>> pts;
    std::vector<Label> labels;
    clusters(rng, pts, labels, 25, 30, Label::Weak, 30);
    clusters(rng, pts, labels, 75, 70, Label::Good, 30);
    const auto ds = from_points(pts, labels);

    const auto tiny = decision_grid(ds, everyone(ds), 2, 1);
    CHECK(tiny.scores.size() == 4);

    const auto grid = decision_grid(ds, everyone(ds), 25, 1);
    CHECK(grid.scores.size() == 625);
    double lo = 1.0, hi = 0.0;
    for (double s : grid.scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    CHECK(lo < 0.5);
    CHECK(hi > 0.5);
    // Weak sits at the low end of PC1 when both marks load positively.
    const std::size_t mid = 12;
    CHECK((grid.at(0, mid) - 0.5) * (grid.at(24, mid) - 0.5) < 0.0);
}

TEST_CASE("decision grid on an XOR pattern is not a straight line") {
    std::mt19937_64 rng(5);
    std::vector<std::array<int, 2>> pts;
    std::vector<Label> labels;
    clusters(rng, pts, labels, 20, 20, Label::Weak, 25);
    clusters(rng, pts, labels, 80, 80, Label::Weak, 25);
    clusters(rng, pts, labels, 20, 80, Label::Good, 25);
    clusters(rng, pts, labels, 80, 20, Label::Good, 25);
    const auto ds = from_points(pts, labels);
    const std::size_t res = 40;
    const auto grid = decision_grid(ds, everyone(ds), res, 2);

    std::vector<std::array<double, 2>> crossing;
    for (std::size_t iy = 0; iy < res; ++iy) {
        for (std::size_t ix = 0; ix + 1 < res; ++ix) {
            if ((grid.at(ix, iy) - 0.5) * (grid.at(ix + 1, iy) - 0.5) < 0.0) {
                crossing.push_back({0.5 * (grid.x_at(ix) + grid.x_at(ix + 1)), grid.y_at(iy)});
            }
        }
    }
    for (std::size_t ix = 0; ix < res; ++ix) {
        for (std::size_t iy = 0; iy + 1 < res; ++iy) {
            if ((grid.at(ix, iy) - 0.5) * (grid.at(ix, iy + 1) - 0.5) < 0.0) {
                crossing.push_back({grid.x_at(ix), 0.5 * (grid.y_at(iy) + grid.y_at(iy + 1))});
            }
        }
    }
    REQUIRE(crossing.size() >= 3);
    // Smallest principal spread of the crossing set, relative to the grid width.
    double mx = 0, my = 0;
    for (const auto& c : crossing) mx += c[0], my += c[1];
    mx /= static_cast<double>(crossing.size());
    my /= static_cast<double>(crossing.size());
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& c : crossing) {
        sxx += (c[0] - mx) * (c[0] - mx);
        syy += (c[1] - my) * (c[1] - my);
        sxy += (c[0] - mx) * (c[1] - my);
    }
    const double n = static_cast<double>(crossing.size());
    sxx /= n, syy /= n, sxy /= n;
    const double minor = 0.5 * (sxx + syy) - std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
    const double width = grid.x_max - grid.x_min;
    CHECK(std::sqrt(std::max(0.0, minor)) > 0.05 * width);
}

TEST_CASE("csv exports") {
    FeatureMatrix x(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        x(i, 0) = static_cast<double>(i);
        x(i, 1) = static_cast<double>(i * i);
    }
    const auto csv = pca_csv(pca_matrix(x, {"a", "b"}));
    CHECK(csv.rfind("component,explained_pct,a,b\n", 0) == 0);
    CHECK(importance_csv({{"a", 0.5}}) == "feature,importance\na,0.500000\n");
}

}  // TEST_SUITE
