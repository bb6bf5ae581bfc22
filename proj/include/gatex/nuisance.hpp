#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gatex/linalg.hpp"
#include "gatex/rng.hpp"

namespace gatex {

// ---------------------------------------------------------------------------
// l2-regularized logistic regression, fit by IRLS

struct LogisticModel {
    std::vector<double> w; // d weights then bias
    double penalty = 0.0;
    int iterations = 0;
    double grad_norm = 0.0;

    double predict(const double* x, std::size_t d, double eps_clip) const;
    void predict(const Matrix& x, std::vector<double>& out, double eps_clip) const;
};

LogisticModel fit_logistic_irls(const Matrix& x, const std::vector<std::uint8_t>& y,
                                double penalty, int max_iter = 100, double tol = 1e-8);

// Grid selection by held-out log-loss on a val_fraction split, then a refit on
// all supplied rows. A single-member grid skips the split entirely.
LogisticModel fit_logistic(const Matrix& x, const std::vector<std::uint8_t>& y,
                           const std::vector<double>& penalty_grid, double val_fraction,
                           Rng& rng);

// ---------------------------------------------------------------------------
// ridge regression (closed form), the fast-mode stand-in for the MLP

struct RidgeModel {
    std::vector<double> w; // d weights then bias
    double alpha = 0.0;

    double predict(const double* x, std::size_t d) const;
    void predict(const Matrix& x, std::vector<double>& out) const;
};

RidgeModel fit_ridge_fixed(const Matrix& x, const std::vector<double>& y, double alpha);
RidgeModel fit_ridge(const Matrix& x, const std::vector<double>& y,
                     const std::vector<double>& alpha_grid, double val_fraction, Rng& rng);

// ---------------------------------------------------------------------------
// MLP regressor trained full-batch with Adam

enum class Activation { relu, tanh };

struct MlpConfig {
    std::vector<std::size_t> hidden{50, 50};
    Activation act = Activation::relu;
    double alpha = 1e-4; // l2 penalty
    int epochs = 250;
    double lr = 1e-3;
};

struct MlpGrid {
    std::vector<std::vector<std::size_t>> hidden{{100}, {50, 50}, {25, 25}};
    std::vector<Activation> acts{Activation::relu, Activation::tanh};
    std::vector<double> alphas{1.0, 0.1, 0.01, 0.001, 0.0001};
    std::vector<int> epochs{250, 500};
    double lr = 1e-3;

    static MlpGrid defaults() { return {}; }
    static MlpGrid tiny(); // one small config, for tests and smoke runs
    std::size_t size() const {
        return hidden.size() * acts.size() * alphas.size() * epochs.size();
    }
};

struct MlpModel {
    std::vector<Matrix> weights;        // per layer, (fan_in x fan_out)
    std::vector<std::vector<double>> bias;
    Activation act = Activation::relu;
    MlpConfig config;
    // training happens in standardized coordinates; the transforms live with
    // the weights so predictions come back on the original scale
    std::vector<double> x_mean, x_scale;
    double y_mean = 0.0, y_scale = 1.0;

    void predict(const Matrix& x, std::vector<double>& out) const;
    double predict_one(const double* x, std::size_t d) const;
};

MlpModel fit_mlp_fixed(const Matrix& x, const std::vector<double>& y, const MlpConfig& cfg,
                       Rng& rng);
MlpModel fit_mlp(const Matrix& x, const std::vector<double>& y, const MlpGrid& grid,
                 double val_fraction, Rng& rng);

// ---------------------------------------------------------------------------
// cross-fitting

struct CrossFitPlan {
    std::size_t n = 0;
    std::vector<std::vector<std::uint32_t>> folds; // disjoint, sorted, cover 0..n-1
    std::uint64_t seed = 0;
};

CrossFitPlan make_crossfit_plan(std::size_t n, std::size_t k, std::uint64_t seed);

enum class RegressorKind { mlp, ridge };
enum class Expansion { none, squares, quadratic };

struct NuisanceOptions {
    RegressorKind regressor = RegressorKind::mlp;
    MlpGrid mlp_grid = MlpGrid::defaults();
    std::vector<double> ridge_grid{1.0, 0.1, 0.01, 0.001, 0.0001};
    std::vector<double> logistic_grid{1.0, 0.1, 0.01, 0.001};
    double val_fraction = 0.2;
    double eps_clip = 0.01;
    Expansion expansion = Expansion::none;           // classifier designs
    Expansion regressor_expansion = Expansion::none; // outcome-model designs

    static NuisanceOptions paper_defaults() { return {}; }
    // ridge stand-in for the MLP: squared continuous columns for the
    // classifiers, a full quadratic for the outcome models (the control
    // surface is an exponential of a linear index)
    static NuisanceOptions fast();
};

// squares: squares of non-binary columns appended on the right
// quadratic: squares of non-binary columns plus all pairwise products
Matrix expand_features(const Matrix& x, Expansion e);

struct AnyRegressor {
    std::variant<RidgeModel, MlpModel> model;
    void predict(const Matrix& x, std::vector<double>& out) const;
};

AnyRegressor fit_regressor(const Matrix& x, const std::vector<double>& y,
                           const NuisanceOptions& opts, Rng& rng);

// Cross-fitted nuisances for the transported estimator: outcome regressions on
// the source arms, treatment propensity among source rows, selection score.
struct TransportNuisances {
    std::vector<double> g1, g0, e1, p;
};

TransportNuisances crossfit_transport_nuisances(const Matrix& x,
                                                const std::vector<std::uint8_t>& s,
                                                const std::vector<std::uint8_t>& a,
                                                const std::vector<double>& y,
                                                const CrossFitPlan& plan,
                                                const NuisanceOptions& opts,
                                                std::uint64_t seed);

// Cross-fitted nuisances for the doubly-robust score: outcome regression with
// treatment as an input, and the propensity score.
struct DrNuisances {
    std::vector<double> mu1, mu0, s;
};

DrNuisances crossfit_dr_nuisances(const Matrix& x, const std::vector<std::uint8_t>& a,
                                  const std::vector<double>& y, const CrossFitPlan& plan,
                                  const NuisanceOptions& opts, std::uint64_t seed);

} // namespace gatex
