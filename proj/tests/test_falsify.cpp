#include <doctest.h>

#include <cmath>

#include "gatex/falsify.hpp"
#include "gatex/rng.hpp"
#include "gatex/stats.hpp"

using namespace gatex;

namespace {

GateEstimate make_est(int id, int group, double point, double asym_var, std::int64_t n) {
    GateEstimate e;
    e.estimator_id = id;
    e.group = group;
    e.point = point;
    e.asym_var = asym_var;
    e.n_used = n;
    return e;
}

} // namespace

TEST_SUITE("falsify") {

TEST_CASE("test statistic, hand example") {
    const auto obs = make_est(1, 0, 2.0, 4.0, 400);
    const auto rct = make_est(0, 0, 1.5, 9.0, 100);
    const TestStatistic t = test_statistic(obs, rct, 0.0);
    CHECK(t.se == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
    CHECK(t.t_value == doctest::Approx(1.5811).epsilon(1e-4));
    // components reproduce the statistic
    CHECK((t.obs_point - t.rct_point - t.mu_offset) / t.se ==
          doctest::Approx(t.t_value).epsilon(1e-12));
}

TEST_CASE("identical estimates and centered offsets give zero") {
    const auto obs = make_est(1, 0, 2.0, 4.0, 400);
    const auto rct = make_est(0, 0, 2.0, 4.0, 400);
    CHECK(test_statistic(obs, rct, 0.0).t_value == 0.0);

    const auto rct2 = make_est(0, 0, 1.5, 9.0, 100);
    CHECK(test_statistic(obs, rct2, 0.5).t_value == doctest::Approx(0.0));
}

TEST_CASE("degenerate variance raises") {
    const auto obs = make_est(1, 0, 2.0, 0.0, 400);
    const auto rct = make_est(0, 0, 1.5, 0.0, 100);
    CHECK_THROWS_AS(test_statistic(obs, rct, 0.0), DegenerateVarianceError);
}

TEST_CASE("bonferroni threshold at alpha=0.05, two validation groups") {
    CHECK(falsification_threshold(0.05, 2) == doctest::Approx(2.497705).epsilon(1e-6));
}

TEST_CASE("acceptance is a max-|t| cut") {
    std::map<int, std::vector<TestStatistic>> tests;
    TestStatistic a;
    a.estimator_id = 1;
    a.group = 0;
    a.t_value = 1.0;
    TestStatistic b = a;
    b.group = 1;
    b.t_value = 2.0;
    tests[1] = {a, b};
    TestStatistic c = a;
    c.estimator_id = 2;
    c.t_value = 3.0;
    TestStatistic d = b;
    d.estimator_id = 2;
    tests[2] = {c, d};

    const auto accepted = gate_estimators(tests, 0.05, 2);
    CHECK(accepted.count(1) == 1); // both below 2.4977
    CHECK(accepted.count(2) == 0); // 3.0 exceeds the cut

    const auto empty = gate_estimators({}, 0.05, 2);
    CHECK(empty.empty());
}

TEST_CASE("acceptance of one estimator ignores the others") {
    std::map<int, std::vector<TestStatistic>> solo, both;
    TestStatistic a;
    a.estimator_id = 1;
    a.group = 0;
    a.t_value = 0.4;
    TestStatistic b = a;
    b.group = 1;
    solo[1] = {a, b};
    both = solo;
    TestStatistic big = a;
    big.estimator_id = 2;
    big.t_value = 50.0;
    TestStatistic big2 = big;
    big2.group = 1;
    both[2] = {big, big2};

    CHECK(gate_estimators(solo, 0.05, 2).count(1) == 1);
    CHECK(gate_estimators(both, 0.05, 2).count(1) == 1);
    CHECK(gate_estimators(both, 0.05, 2).count(2) == 0);
}

TEST_CASE("power formula: size, pinned value, limit") {
    CHECK(asymptotic_power(0.0, 0.05) == doctest::Approx(0.05).epsilon(1e-9));
    // 1 - Phi(3 + z_{.025}) + Phi(3 - z_{.025}) computed with a 30-digit
    // erfc oracle: 0.85083876832705602
    CHECK(asymptotic_power(3.0, 0.05) == doctest::Approx(0.8508387683).epsilon(1e-9));
    CHECK(asymptotic_power(30.0, 0.05) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("power is symmetric and monotone in the standardized bias") {
    double prev = 0.0;
    for (double m = 0.0; m <= 6.0; m += 0.25) {
        const double p = asymptotic_power(m, 0.05);
        CHECK(asymptotic_power(-m, 0.05) == doctest::Approx(p).epsilon(1e-12));
        CHECK(p >= prev - 1e-12);
        prev = p;
    }
}

TEST_CASE("null rejection frequency matches the level") {
    Rng rng(71);
    const int draws = 10000;
    const double sigma_k = 2.0, sigma_0 = 3.0;
    const double nk = 400, n0 = 100;
    const double s = std::sqrt(sigma_k * sigma_k / nk + sigma_0 * sigma_0 / n0);
    int rejects = 0;
    const double z = stats::normal_quantile(0.975);
    for (int i = 0; i < draws; ++i) {
        const double tk = 1.0 + rng.normal() * sigma_k / std::sqrt(nk);
        const double t0 = 1.0 + rng.normal() * sigma_0 / std::sqrt(n0);
        if (std::abs((tk - t0) / s) > z) ++rejects;
    }
    const double rate = static_cast<double>(rejects) / draws;
    const double se = std::sqrt(0.05 * 0.95 / draws);
    CHECK(std::abs(rate - 0.05) < 4.0 * se);
}

TEST_CASE("a fixed bias is rejected more often as samples grow") {
    Rng rng(72);
    const double bias = 1.0, sigma = 4.0;
    const double z = falsification_threshold(0.05, 1);
    std::vector<double> accept_rates;
    for (double scale : {1.0, 3.0, 5.0, 10.0}) {
        const double n = 200.0 * scale;
        const double s = std::sqrt(2.0 * sigma * sigma / n);
        int accepted = 0;
        const int reps = 4000;
        for (int i = 0; i < reps; ++i) {
            const double t = (bias + rng.normal() * s) / s;
            if (std::abs(t) <= z) ++accepted;
        }
        accept_rates.push_back(static_cast<double>(accepted) / reps);
    }
    for (std::size_t i = 1; i < accept_rates.size(); ++i)
        CHECK(accept_rates[i] <= accept_rates[i - 1] + 0.02);
}

} // TEST_SUITE
