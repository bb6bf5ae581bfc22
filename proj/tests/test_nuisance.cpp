#include <doctest.h>

#include <cmath>
#include <set>

#include "gatex/errors.hpp"
#include "gatex/nuisance.hpp"
#include "gatex/stats.hpp"

using namespace gatex;

TEST_SUITE("nuisance") {

TEST_CASE("logistic null model: slope vanishes, intercept hits logit(mean)") {
    Rng rng(101);
    const std::size_t n = 10000;
    Matrix x(n, 1);
    std::vector<std::uint8_t> y(n);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        y[i] = rng.bernoulli(0.4) ? 1 : 0;
        pos += y[i];
    }
    const LogisticModel m = fit_logistic_irls(x, y, 0.001);
    CHECK(std::abs(m.w[0]) < 0.05);
    const double target = std::log(static_cast<double>(pos) / (n - pos));
    CHECK(m.w[1] == doctest::Approx(target).epsilon(0.02));
}

TEST_CASE("separated data under strong penalty keeps probabilities interior") {
    Matrix x(20, 1);
    std::vector<std::uint8_t> y(20);
    for (std::size_t i = 0; i < 20; ++i) {
        x(i, 0) = i < 10 ? -1.0 : 1.0;
        y[i] = i < 10 ? 0 : 1;
    }
    const LogisticModel m = fit_logistic_irls(x, y, 1.0);
    for (std::size_t i = 0; i < 20; ++i) {
        const double p = m.predict(x.row(i), 1, 0.0);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
    // clipped prediction obeys the configured floor
    const double clipped = m.predict(x.row(19), 1, 0.01);
    CHECK(clipped <= 0.99);
    CHECK(clipped >= 0.01);
}

TEST_CASE("single-class outcome is a degenerate fit") {
    Matrix x(8, 1);
    std::vector<std::uint8_t> y(8, 1);
    for (std::size_t i = 0; i < 8; ++i) x(i, 0) = static_cast<double>(i);
    CHECK_THROWS_AS(fit_logistic_irls(x, y, 0.1), DegenerateFitError);
}

TEST_CASE("default penalty grid matches the published one") {
    const NuisanceOptions opts;
    CHECK(opts.logistic_grid == std::vector<double>{1.0, 0.1, 0.01, 0.001});
    const MlpGrid grid;
    CHECK(grid.epochs == std::vector<int>{250, 500});
    CHECK(grid.hidden.size() == 3);
    CHECK(grid.alphas.size() == 5);
    CHECK(grid.lr == 0.001);
}

TEST_CASE("grid selection picks by held-out loss and refits on all rows") {
    Rng rng(102);
    const std::size_t n = 400;
    Matrix x(n, 1);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        y[i] = rng.bernoulli(stats::sigmoid(2.0 * x(i, 0))) ? 1 : 0;
    }
    Rng fit_rng(103);
    const LogisticModel m = fit_logistic(x, y, {1.0, 0.1, 0.01, 0.001}, 0.2, fit_rng);
    CHECK(m.w[0] > 1.0); // strong true slope survives selection
}

TEST_CASE("ridge recovers a constant outcome") {
    Matrix x(30, 2);
    Rng rng(104);
    for (auto& v : x.data) v = rng.normal();
    std::vector<double> y(30, 3.25);
    const RidgeModel m = fit_ridge_fixed(x, y, 0.01);
    for (std::size_t i = 0; i < 30; ++i)
        CHECK(m.predict(x.row(i), 2) == doctest::Approx(3.25).epsilon(1e-3));
}

TEST_CASE("mlp recovers a constant outcome") {
    Matrix x(40, 2);
    Rng rng(105);
    for (auto& v : x.data) v = rng.normal();
    std::vector<double> y(40, -7.5);
    MlpConfig cfg;
    cfg.hidden = {16};
    cfg.epochs = 250;
    Rng fit_rng(106);
    const MlpModel m = fit_mlp_fixed(x, y, cfg, fit_rng);
    std::vector<double> pred;
    m.predict(x, pred);
    for (double p : pred) CHECK(p == doctest::Approx(-7.5).epsilon(1e-3));
}

TEST_CASE("mlp fits a linear surface: R^2 above 0.95 against the exact fit") {
    Rng rng(107);
    const std::size_t n = 2000;
    Matrix x(n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal();
        y[i] = 1.0 * x(i, 0) + 2.0 * x(i, 1) - 1.0 * x(i, 2) + 0.1 * rng.normal();
    }
    MlpConfig cfg;
    cfg.hidden = {50, 50};
    cfg.act = Activation::tanh;
    cfg.alpha = 1e-4;
    cfg.epochs = 500;
    Rng fit_rng(108);
    const MlpModel m = fit_mlp_fixed(x, y, cfg, fit_rng);
    std::vector<double> pred;
    m.predict(x, pred);
    double ss_res = 0.0, ss_tot = 0.0;
    const double ybar = stats::mean(y);
    for (std::size_t i = 0; i < n; ++i) {
        ss_res += (pred[i] - y[i]) * (pred[i] - y[i]);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    CHECK(1.0 - ss_res / ss_tot > 0.95);
}

TEST_CASE("crossfit plan: sizes balanced, partition exact, deterministic") {
    const CrossFitPlan plan = make_crossfit_plan(9, 3, 55);
    REQUIRE(plan.folds.size() == 3);
    for (const auto& f : plan.folds) CHECK(f.size() == 3);

    const CrossFitPlan again = make_crossfit_plan(9, 3, 55);
    CHECK(plan.folds == again.folds);

    const CrossFitPlan uneven = make_crossfit_plan(10, 3, 56);
    std::multiset<std::size_t> sizes;
    std::set<std::uint32_t> seen;
    for (const auto& f : uneven.folds) {
        sizes.insert(f.size());
        for (auto i : f) seen.insert(i);
    }
    CHECK(sizes == std::multiset<std::size_t>{3, 3, 4});
    CHECK(seen.size() == 10);

    CHECK_THROWS_AS(make_crossfit_plan(2, 3, 1), ConfigError);
}

namespace {

NuisanceOptions fixed_opts() {
    NuisanceOptions opts;
    opts.regressor = RegressorKind::ridge;
    opts.ridge_grid = {0.01};
    opts.logistic_grid = {0.1};
    opts.expansion = Expansion::none;
    return opts;
}

struct DrToy {
    Matrix x;
    std::vector<std::uint8_t> a;
    std::vector<double> y;
};

DrToy make_dr_toy(std::size_t n, std::uint64_t seed) {
    DrToy t;
    t.x = Matrix(n, 2);
    t.a.resize(n);
    t.y.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        t.x(i, 0) = rng.normal();
        t.x(i, 1) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        t.a[i] = rng.bernoulli(0.5) ? 1 : 0;
        t.y[i] = 2.0 * t.a[i] + t.x(i, 0) + rng.normal();
    }
    return t;
}

} // namespace

TEST_CASE("crossfit predictions cover every row exactly once") {
    const auto toy = make_dr_toy(30, 201);
    const CrossFitPlan plan = make_crossfit_plan(30, 3, 202);
    for (const auto& f : plan.folds) CHECK(f.size() == 10); // n - n/K train size check
    const DrNuisances nu = crossfit_dr_nuisances(toy.x, toy.a, toy.y, plan, fixed_opts(), 203);
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(std::isfinite(nu.mu1[i]));
        CHECK(nu.s[i] >= 0.01);
        CHECK(nu.s[i] <= 0.99);
    }
}

TEST_CASE("leave-one-out crossfit equals per-row refits exactly") {
    const auto toy = make_dr_toy(20, 204);
    const CrossFitPlan plan = make_crossfit_plan(20, 20, 205);
    const auto opts = fixed_opts();
    const DrNuisances nu = crossfit_dr_nuisances(toy.x, toy.a, toy.y, plan, opts, 206);

    Matrix design(20, 3);
    for (std::size_t i = 0; i < 20; ++i) {
        design(i, 0) = static_cast<double>(toy.a[i]);
        design(i, 1) = toy.x(i, 0);
        design(i, 2) = toy.x(i, 1);
    }
    for (std::size_t hold = 0; hold < 20; ++hold) {
        Matrix xt(19, 3), xs(19, 2);
        std::vector<double> yt;
        std::vector<std::uint8_t> at;
        std::size_t at_row = 0;
        for (std::size_t i = 0; i < 20; ++i) {
            if (i == hold) continue;
            for (std::size_t j = 0; j < 3; ++j) xt(at_row, j) = design(i, j);
            xs(at_row, 0) = toy.x(i, 0);
            xs(at_row, 1) = toy.x(i, 1);
            yt.push_back(toy.y[i]);
            at.push_back(toy.a[i]);
            ++at_row;
        }
        const RidgeModel mu = fit_ridge_fixed(xt, yt, 0.01);
        const LogisticModel sm = fit_logistic_irls(xs, at, 0.1);

        double row1[3] = {1.0, toy.x(hold, 0), toy.x(hold, 1)};
        double row0[3] = {0.0, toy.x(hold, 0), toy.x(hold, 1)};
        CHECK(nu.mu1[hold] == mu.predict(row1, 3));
        CHECK(nu.mu0[hold] == mu.predict(row0, 3));
        CHECK(nu.s[hold] == sm.predict(toy.x.row(hold), 2, 0.01));
    }
}

TEST_CASE("crossfit is deterministic in the seed") {
    const auto toy = make_dr_toy(60, 207);
    std::vector<std::uint8_t> s(60);
    Rng rng(208);
    for (auto& v : s) v = rng.bernoulli(0.5) ? 1 : 0;
    const CrossFitPlan plan = make_crossfit_plan(60, 3, 209);
    NuisanceOptions opts = NuisanceOptions::fast();
    const auto a = crossfit_transport_nuisances(toy.x, s, toy.a, toy.y, plan, opts, 210);
    const auto b = crossfit_transport_nuisances(toy.x, s, toy.a, toy.y, plan, opts, 210);
    CHECK(a.g1 == b.g1);
    CHECK(a.g0 == b.g0);
    CHECK(a.e1 == b.e1);
    CHECK(a.p == b.p);
}

TEST_CASE("selection score recovers a coin-flip source indicator") {
    Rng rng(211);
    const std::size_t n = 5000;
    Matrix x(n, 3);
    std::vector<std::uint8_t> s(n), a(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal();
        s[i] = rng.bernoulli(0.5) ? 1 : 0;
        a[i] = rng.bernoulli(0.5) ? 1 : 0;
        y[i] = x(i, 0) + rng.normal();
    }
    const CrossFitPlan plan = make_crossfit_plan(n, 3, 212);
    const auto nu = crossfit_transport_nuisances(x, s, a, y, plan, NuisanceOptions::fast(), 213);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err += std::abs(nu.p[i] - 0.5);
    CHECK(err / n < 0.05);
}

TEST_CASE("a complement missing a treatment arm is a fold error") {
    auto toy = make_dr_toy(6, 214);
    std::fill(toy.a.begin(), toy.a.end(), std::uint8_t{0});
    toy.a[0] = 1;
    const CrossFitPlan plan = make_crossfit_plan(6, 2, 215);
    CHECK_THROWS_AS(crossfit_dr_nuisances(toy.x, toy.a, toy.y, plan, fixed_opts(), 216),
                    FoldError);
}

TEST_CASE("squares expansion touches only continuous columns") {
    Matrix x(3, 2);
    x(0, 0) = 2.0;
    x(1, 0) = -1.0;
    x(2, 0) = 0.5;
    x(0, 1) = 1.0;
    x(1, 1) = 0.0;
    x(2, 1) = 1.0;
    const Matrix e = expand_features(x, Expansion::squares);
    REQUIRE(e.cols == 3);
    CHECK(e(0, 2) == doctest::Approx(4.0));
    CHECK(e(1, 2) == doctest::Approx(1.0));
    const Matrix same = expand_features(x, Expansion::none);
    CHECK(same.cols == 2);
}

} // TEST_SUITE
