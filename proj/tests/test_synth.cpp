#include <doctest.h>

#include <cmath>

#include "ensel/error.hpp"
#include "ensel/metrics.hpp"
#include "ensel/random.hpp"
#include "ensel/synth.hpp"
#include "ensel/tuning.hpp"

using namespace ensel;

namespace {

double tuned_test_gini(AlgorithmId id, const Dataset& ds, std::uint64_t seed) {
    const auto split = stratified_split(ds, 0.7, seed);
    const auto folds = kfold(split.train, 3, derive_seed(seed, 1), ds.labels);
    const auto tuned = grid_search(grid_for(id, DatasetProfile::Dataset1Like, ds.n_features()), ds, split.train,
                                   folds, derive_seed(seed, 2));
    const auto model = train(id, tuned.best, ds, split.train, derive_seed(seed, 3));
    return gini(score(model, ds, split.test.span()), labels_at(ds, split.test.span()));
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("label counts follow the rounding rule") {
    SynthSpec spec;
    spec.n_students = 486;
    spec.weak_fraction = 0.043;
    CHECK(synth_weak_count(spec) == 21);
    const auto ds = generate(spec);
    CHECK(ds.count(Label::Weak) == 21);
    CHECK(ds.size() == 486);

    spec.n_students = 52;
    spec.weak_fraction = 0.404;
    CHECK(generate(spec).count(Label::Weak) == 21);
}

TEST_CASE("determinism and ranges") {
    SynthSpec spec;
    spec.seed = 77;
    spec.skew = 3.0;
    const auto a = generate_raw(spec);
    const auto b = generate_raw(spec);
    CHECK(a.raw_marks == b.raw_marks);
    CHECK(a.final_grade == b.final_grade);
    spec.seed = 78;
    CHECK(generate_raw(spec).raw_marks != a.raw_marks);
    for (const auto& row : a.raw_marks) {
        for (const auto& m : row) {
            REQUIRE(m.has_value());
            CHECK(*m >= 0.0);
            CHECK(*m <= 100.0);
            CHECK(*m == std::round(*m));
        }
    }
    for (double g : a.final_grade) {
        CHECK(g >= 0.0);
        CHECK(g <= 100.0);
    }
    a.validate();
}

TEST_CASE("invalid specs") {
    auto kind = [](SynthSpec s) {
        try {
            validate(s);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    SynthSpec s;
    s.weak_fraction = 0.0;
    CHECK(kind(s) == ErrorKind::InvalidSpec);
    s = {};
    s.n_signal_features = 20;
    CHECK(kind(s) == ErrorKind::InvalidSpec);
    s = {};
    s.n_students = 10;
    s.weak_fraction = 0.05;
    CHECK(kind(s) == ErrorKind::InvalidSpec);
    s = {};
    s.separation = -1;
    CHECK(kind(s) == ErrorKind::InvalidSpec);
}

TEST_CASE("no separation gives no signal") {
    SynthSpec spec;
    spec.n_students = 400;
    spec.separation = 0.0;
    spec.seed = 5;
    const auto ds = generate(spec);
    for (auto id : kAllAlgorithms) {
        CAPTURE(to_string(id));
        CHECK(std::abs(tuned_test_gini(id, ds, 11)) < 0.25);
    }
}

TEST_CASE("wide separation is easy for logistic regression") {
    SynthSpec spec;
    spec.n_students = 200;
    spec.separation = 4.0;
    spec.seed = 7;
    CHECK(tuned_test_gini(AlgorithmId::LREG, generate(spec), 3) >= 0.95);
}

}  // TEST_SUITE
