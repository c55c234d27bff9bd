#include <doctest.h>

#include <algorithm>

#include "ensel/error.hpp"
#include "ensel/synth.hpp"
#include "ensel/tuning.hpp"

using namespace ensel;

namespace {

std::vector<double> axis(const ParamGrid& g, const std::string& name) {
    for (const auto& [n, values] : g.axes) {
        if (n != name) continue;
        std::vector<double> out;
        for (const auto& v : values) out.push_back(std::get<double>(v));
        return out;
    }
    return {};
}

struct Fixture {
    Dataset ds;
    Split split;
    FoldPlan folds;

    explicit Fixture(double separation, std::uint64_t seed = 5) {
        SynthSpec spec;
        spec.n_students = 120;
        spec.separation = separation;
        spec.seed = seed;
        ds = generate(spec);
        split = stratified_split(ds, 0.7, seed);
        folds = kfold(split.train, 3, seed, ds.labels);
    }
};

}  // namespace

TEST_SUITE("tuning") {

TEST_CASE("grids") {
    const auto knn = grid_for(AlgorithmId::KNN, DatasetProfile::Dataset1Like, 9);
    CHECK(knn.points().size() == 20);
    CHECK(axis(knn, "k").front() == 5);
    CHECK(axis(knn, "k").back() == 43);

    const auto lreg = grid_for(AlgorithmId::LREG, DatasetProfile::Dataset2Like, 2);
    REQUIRE(lreg.points().size() == 1);
    CHECK(lreg.points().front().entries.empty());

    const auto rf = grid_for(AlgorithmId::RF, DatasetProfile::Dataset1Like, 9);
    CHECK(axis(rf, "mtry") == std::vector<double>{2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(axis(grid_for(AlgorithmId::RF, DatasetProfile::Dataset1Like, 12), "mtry").size() == 11);
    CHECK(axis(grid_for(AlgorithmId::RF, DatasetProfile::Dataset2Like, 4), "mtry") == std::vector<double>{2, 3, 4});

    const auto svm1 = grid_for(AlgorithmId::SVM, DatasetProfile::Dataset1Like, 9);
    CHECK(axis(svm1, "C") == std::vector<double>{0.25, 0.5, 1.0});
    CHECK(axis(svm1, "sigma").size() == 5);
    CHECK(axis(svm1, "sigma").front() == doctest::Approx(0.05));
    CHECK(axis(svm1, "sigma").back() == doctest::Approx(0.25));
    const auto svm2 = grid_for(AlgorithmId::SVM, DatasetProfile::Dataset2Like, 2);
    CHECK(axis(svm2, "sigma").size() == 6);
    CHECK(axis(svm2, "sigma").back() == doctest::Approx(0.8));
    CHECK(svm1.points().size() == 15);

    const auto mlp = grid_for(AlgorithmId::MLP, DatasetProfile::Dataset1Like, 9);
    CHECK(axis(mlp, "neurons") == std::vector<double>{1, 3, 5});
    CHECK(axis(mlp, "hidden_layers") == std::vector<double>{1});
    CHECK(grid_for(AlgorithmId::NB, DatasetProfile::Dataset1Like, 9).points().size() == 2);

    for (auto id : kAllAlgorithms) {
        for (const auto& p : grid_for(id, DatasetProfile::Dataset1Like, 9).points()) validate_params(p, 9);
    }
}

TEST_CASE("grid overrides") {
    auto g = grid_for(AlgorithmId::SVM, DatasetProfile::Dataset1Like, 9);
    apply_grid_overrides(g, KeyValueFile::parse("svm.sigma = 0.1, 0.2\nknn.k = 3\n"));
    CHECK(axis(g, "sigma") == std::vector<double>{0.1, 0.2});
    auto nb = grid_for(AlgorithmId::NB, DatasetProfile::Dataset1Like, 9);
    apply_grid_overrides(nb, KeyValueFile::parse("nb.usekernel = false"));
    CHECK(nb.points().size() == 1);
    CHECK_THROWS_AS(apply_grid_overrides(g, KeyValueFile::parse("svm.gamma = 1")), Error);
}

TEST_CASE("single point grids return that point") {
    const Fixture f(2.0);
    ParamGrid g{AlgorithmId::KNN, DatasetProfile::Dataset1Like, {{"k", {ParamValue{9.0}}}}};
    const auto r = grid_search(g, f.ds, f.split.train, f.folds, 1);
    CHECK(r.best.number("k") == 9);
    CHECK(r.all_points.size() == 1);
    CHECK(r.cv_gini == r.all_points.front().second);
}

TEST_CASE("separable data tunes well and reproducibly") {
    const Fixture f(4.0);
    const auto g = grid_for(AlgorithmId::KNN, DatasetProfile::Dataset1Like, f.ds.n_features());
    const auto r = grid_search(g, f.ds, f.split.train, f.folds, 3);
    CHECK(r.cv_gini >= 0.9);
    double best = -2;
    for (const auto& [p, v] : r.all_points) best = std::max(best, v);
    CHECK(r.cv_gini == best);
    const auto again = grid_search(g, f.ds, f.split.train, f.folds, 3, 3);
    CHECK(again.all_points == r.all_points);
    CHECK(again.best == r.best);
}

TEST_CASE("ties go to the earliest grid point") {
    const Fixture f(2.0);
    // Two identical values give identical models, so identical fold Ginis.
    ParamGrid g{AlgorithmId::NB, DatasetProfile::Dataset1Like, {{"usekernel", {ParamValue{false}, ParamValue{false}}}}};
    const auto r = grid_search(g, f.ds, f.split.train, f.folds, 1);
    CHECK(r.all_points[0].second == r.all_points[1].second);
    CHECK(r.best == r.all_points[0].first);
}

TEST_CASE("fold plans must stay inside the training rows") {
    const Fixture f(2.0);
    FoldPlan bad = f.folds;
    bad.folds[0].push_back(f.split.test[0]);
    const auto g = grid_for(AlgorithmId::LREG, DatasetProfile::Dataset1Like, f.ds.n_features());
    CHECK_THROWS_AS(grid_search(g, f.ds, f.split.train, bad, 1), Error);
}

}  // TEST_SUITE
