#include "gatex/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gatex/dataset.hpp"
#include "gatex/errors.hpp"
#include "gatex/kernels.hpp"
#include "gatex/stats.hpp"

namespace gatex {

namespace {

Matrix with_bias_column(const Matrix& x) {
    Matrix out(x.rows, x.cols + 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* src = x.row(i);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) dst[j] = src[j];
        dst[x.cols] = 1.0;
    }
    return out;
}

// deterministic train/validation split: shuffled, then sorted back so that
// accumulation order does not depend on the shuffle
void split_indices(std::size_t n, double val_fraction, Rng& rng,
                   std::vector<std::uint32_t>& train, std::vector<std::uint32_t>& val) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    rng.shuffle(idx);
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    n_val = std::min(std::max<std::size_t>(n_val, 1), n - 1);
    val.assign(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
    train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_val));
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::uint32_t>& idx) {
    std::vector<T> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// logistic regression

double LogisticModel::predict(const double* x, std::size_t d, double eps_clip) const {
    const double t = kern::dot(w.data(), x, d) + w[d];
    return stats::clip(stats::sigmoid(t), eps_clip, 1.0 - eps_clip);
}

void LogisticModel::predict(const Matrix& x, std::vector<double>& out, double eps_clip) const {
    out.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i), x.cols, eps_clip);
}

namespace {

double penalized_loglik(const Matrix& xb, const std::vector<std::uint8_t>& y,
                        const std::vector<double>& w, double penalty) {
    const std::size_t d = xb.cols;
    double ll = 0.0;
    for (std::size_t i = 0; i < xb.rows; ++i) {
        const double t = kern::dot(w.data(), xb.row(i), d);
        // log(1+e^t) without overflow
        const double soft = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        ll += (y[i] ? t : 0.0) - soft;
    }
    double wsq = 0.0;
    for (std::size_t j = 0; j + 1 < d; ++j) wsq += w[j] * w[j];
    return ll - 0.5 * penalty * wsq;
}

} // namespace

LogisticModel fit_logistic_irls(const Matrix& x, const std::vector<std::uint8_t>& y,
                                double penalty, int max_iter, double tol) {
    const std::size_t n = x.rows;
    std::size_t pos = 0;
    for (auto v : y) pos += v;
    if (pos == 0 || pos == n)
        throw DegenerateFitError("logistic fit: outcome has a single class");

    const Matrix xb = with_bias_column(x);
    const std::size_t d = xb.cols;
    LogisticModel model;
    model.penalty = penalty;
    model.w.assign(d, 0.0);

    std::vector<double> p(n), irls_w(n), grad(d);
    double obj = penalized_loglik(xb, y, model.w, penalty);
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i)
            p[i] = stats::sigmoid(kern::dot(model.w.data(), xb.row(i), d));
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            kern::axpy(static_cast<double>(y[i]) - p[i], xb.row(i), grad.data(), d);
            irls_w[i] = p[i] * (1.0 - p[i]);
        }
        for (std::size_t j = 0; j + 1 < d; ++j) grad[j] -= penalty * model.w[j];

        // tolerance applies to the per-row (mean) gradient, so it is
        // comparable across sample sizes
        const double gnorm = std::sqrt(kern::reduce_sq(grad.data(), d)) / static_cast<double>(n);
        model.iterations = it;
        model.grad_norm = gnorm;
        if (gnorm < tol) return model;

        Matrix h(d, d, 0.0);
        kern::syrk_upper(n, d, xb.data.data(), d, irls_w.data(), h.data.data(), d);
        for (std::size_t j = 0; j + 1 < d; ++j) h(j, j) += penalty;
        h(d - 1, d - 1) += 1e-10;

        const std::vector<double> step = cholesky_solve(std::move(h), grad);
        // Newton with step halving; rounding-level regressions are accepted so
        // the full step carries through near the optimum
        const double slack = 1e-10 * (std::abs(obj) + 1.0);
        double scale = 1.0;
        std::vector<double> trial(d);
        for (int half = 0; half < 30; ++half, scale *= 0.5) {
            for (std::size_t j = 0; j < d; ++j) trial[j] = model.w[j] + scale * step[j];
            const double cand = penalized_loglik(xb, y, trial, penalty);
            if (cand >= obj - slack || half == 29) {
                model.w = trial;
                obj = cand;
                break;
            }
        }
    }
    // re-evaluate the gradient at the final iterate
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double pi = stats::sigmoid(kern::dot(model.w.data(), xb.row(i), d));
        kern::axpy(static_cast<double>(y[i]) - pi, xb.row(i), grad.data(), d);
    }
    for (std::size_t j = 0; j + 1 < d; ++j) grad[j] -= penalty * model.w[j];
    const double gnorm = std::sqrt(kern::reduce_sq(grad.data(), d)) / static_cast<double>(n);
    if (gnorm < tol) {
        model.grad_norm = gnorm;
        return model;
    }
    std::ostringstream os;
    os << "logistic fit: IRLS did not converge in " << max_iter
       << " iterations, gradient norm " << gnorm;
    throw ConvergenceError(os.str(), gnorm);
}

LogisticModel fit_logistic(const Matrix& x, const std::vector<std::uint8_t>& y,
                           const std::vector<double>& penalty_grid, double val_fraction,
                           Rng& rng) {
    if (penalty_grid.empty()) throw ConfigError("logistic fit: empty penalty grid");
    if (penalty_grid.size() == 1) return fit_logistic_irls(x, y, penalty_grid[0]);

    std::vector<std::uint32_t> train, val;
    split_indices(x.rows, val_fraction, rng, train, val);
    const Matrix xt = take_rows(x, train);
    const Matrix xv = take_rows(x, val);
    const auto yt = take(y, train);
    const auto yv = take(y, val);

    std::size_t pos = 0;
    for (auto v : yt) pos += v;
    if (pos < 2 || yt.size() - pos < 2)
        throw DegenerateFitError("logistic fit: fewer than 2 rows per class in training portion");

    double best_loss = 0.0;
    std::size_t best = penalty_grid.size();
    for (std::size_t gi = 0; gi < penalty_grid.size(); ++gi) {
        const LogisticModel m = fit_logistic_irls(xt, yt, penalty_grid[gi]);
        double loss = 0.0;
        for (std::size_t i = 0; i < xv.rows; ++i) {
            const double p = stats::clip(m.predict(xv.row(i), xv.cols, 0.0), 1e-12, 1.0 - 1e-12);
            loss -= yv[i] ? std::log(p) : std::log1p(-p);
        }
        loss /= static_cast<double>(xv.rows);
        if (best == penalty_grid.size() || loss < best_loss) {
            best_loss = loss;
            best = gi;
        }
    }
    return fit_logistic_irls(x, y, penalty_grid[best]);
}

// ---------------------------------------------------------------------------
// ridge

double RidgeModel::predict(const double* x, std::size_t d) const {
    return kern::dot(w.data(), x, d) + w[d];
}

void RidgeModel::predict(const Matrix& x, std::vector<double>& out) const {
    out.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i), x.cols);
}

RidgeModel fit_ridge_fixed(const Matrix& x, const std::vector<double>& y, double alpha) {
    const Matrix xb = with_bias_column(x);
    const std::size_t d = xb.cols;
    Matrix gram(d, d, 0.0);
    kern::syrk_upper(xb.rows, d, xb.data.data(), d, nullptr, gram.data.data(), d);
    for (std::size_t j = 0; j + 1 < d; ++j) gram(j, j) += alpha;
    gram(d - 1, d - 1) += 1e-10;
    std::vector<double> xty(d, 0.0);
    for (std::size_t i = 0; i < xb.rows; ++i) kern::axpy(y[i], xb.row(i), xty.data(), d);
    RidgeModel m;
    m.alpha = alpha;
    m.w = cholesky_solve(std::move(gram), std::move(xty));
    return m;
}

namespace {

void gram_and_xty(const Matrix& xb, const std::vector<double>& y, Matrix& gram,
                  std::vector<double>& xty) {
    const std::size_t d = xb.cols;
    gram = Matrix(d, d, 0.0);
    kern::syrk_upper(xb.rows, d, xb.data.data(), d, nullptr, gram.data.data(), d);
    xty.assign(d, 0.0);
    for (std::size_t i = 0; i < xb.rows; ++i) kern::axpy(y[i], xb.row(i), xty.data(), d);
}

RidgeModel solve_ridge(const Matrix& gram, const std::vector<double>& xty, double alpha) {
    const std::size_t d = gram.rows;
    Matrix lhs = gram;
    for (std::size_t j = 0; j + 1 < d; ++j) lhs(j, j) += alpha;
    lhs(d - 1, d - 1) += 1e-10;
    RidgeModel m;
    m.alpha = alpha;
    m.w = cholesky_solve(std::move(lhs), xty);
    return m;
}

} // namespace

RidgeModel fit_ridge(const Matrix& x, const std::vector<double>& y,
                     const std::vector<double>& alpha_grid, double val_fraction, Rng& rng) {
    if (alpha_grid.empty()) throw ConfigError("ridge fit: empty alpha grid");
    if (alpha_grid.size() == 1) return fit_ridge_fixed(x, y, alpha_grid[0]);

    std::vector<std::uint32_t> train, val;
    split_indices(x.rows, val_fraction, rng, train, val);
    const Matrix xt = with_bias_column(take_rows(x, train));
    const Matrix xv = with_bias_column(take_rows(x, val));
    const auto yt = take(y, train);
    const auto yv = take(y, val);

    // one gram per split, shared across the whole grid
    Matrix gram_t;
    std::vector<double> xty_t;
    gram_and_xty(xt, yt, gram_t, xty_t);

    double best_mse = 0.0;
    std::size_t best = alpha_grid.size();
    for (std::size_t gi = 0; gi < alpha_grid.size(); ++gi) {
        const RidgeModel m = solve_ridge(gram_t, xty_t, alpha_grid[gi]);
        double mse = 0.0;
        for (std::size_t i = 0; i < xv.rows; ++i) {
            const double r = kern::dot(m.w.data(), xv.row(i), xv.cols) - yv[i];
            mse += r * r;
        }
        if (best == alpha_grid.size() || mse < best_mse) {
            best_mse = mse;
            best = gi;
        }
    }

    Matrix gram_v;
    std::vector<double> xty_v;
    gram_and_xty(xv, yv, gram_v, xty_v);
    for (std::size_t i = 0; i < gram_t.data.size(); ++i) gram_t.data[i] += gram_v.data[i];
    for (std::size_t j = 0; j < xty_t.size(); ++j) xty_t[j] += xty_v[j];
    return solve_ridge(gram_t, xty_t, alpha_grid[best]);
}

// ---------------------------------------------------------------------------
// MLP

MlpGrid MlpGrid::tiny() {
    MlpGrid g;
    g.hidden = {{25, 25}};
    g.acts = {Activation::relu};
    g.alphas = {0.01};
    g.epochs = {250};
    return g;
}

namespace {

inline double activate(double z, Activation a) {
    return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double activate_grad(double z, Activation a) {
    if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& w, const std::vector<double>& grad, AdamState& st,
               double lr, int t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < w.size(); ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * grad[i];
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * grad[i] * grad[i];
        w[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
    }
}

} // namespace

void MlpModel::predict(const Matrix& x, std::vector<double>& out) const {
    const std::size_t layers = weights.size();
    if (layers == 0) { // degenerate target: constant prediction
        out.assign(x.rows, y_mean);
        return;
    }
    Matrix act_mat = x;
    for (std::size_t i = 0; i < act_mat.rows; ++i) {
        double* row = act_mat.row(i);
        for (std::size_t j = 0; j < act_mat.cols; ++j)
            row[j] = (row[j] - x_mean[j]) * x_scale[j];
    }
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z(act_mat.rows, weights[l].cols, 0.0);
        kern::gemm_acc(act_mat.rows, weights[l].cols, act_mat.cols, act_mat.data.data(),
                       act_mat.cols, weights[l].data.data(), weights[l].cols, z.data.data(),
                       z.cols);
        for (std::size_t i = 0; i < z.rows; ++i)
            for (std::size_t j = 0; j < z.cols; ++j) {
                z(i, j) += bias[l][j];
                if (l + 1 < layers) z(i, j) = activate(z(i, j), act);
            }
        act_mat = std::move(z);
    }
    out.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = act_mat(i, 0) * y_scale + y_mean;
}

double MlpModel::predict_one(const double* x, std::size_t d) const {
    Matrix m(1, d);
    for (std::size_t j = 0; j < d; ++j) m(0, j) = x[j];
    std::vector<double> out;
    predict(m, out);
    return out[0];
}

MlpModel fit_mlp_fixed(const Matrix& x_raw, const std::vector<double>& y_raw,
                       const MlpConfig& cfg, Rng& rng) {
    const std::size_t n = x_raw.rows;
    if (n < 10) throw DegenerateFitError("mlp fit: needs at least 10 rows");

    MlpModel model;
    model.act = cfg.act;
    model.config = cfg;
    model.x_mean.assign(x_raw.cols, 0.0);
    model.x_scale.assign(x_raw.cols, 1.0);
    for (std::size_t j = 0; j < x_raw.cols; ++j) {
        double m = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += x_raw(i, j);
        m /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) sq += (x_raw(i, j) - m) * (x_raw(i, j) - m);
        const double sd = std::sqrt(sq / static_cast<double>(n));
        model.x_mean[j] = m;
        model.x_scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    model.y_mean = stats::mean(y_raw);
    const double y_sd = std::sqrt(stats::sample_var(y_raw));
    if (y_sd < 1e-12) return model; // constant target, no layers needed
    model.y_scale = y_sd;

    Matrix x(n, x_raw.cols);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < x_raw.cols; ++j)
            x(i, j) = (x_raw(i, j) - model.x_mean[j]) * model.x_scale[j];
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = (y_raw[i] - model.y_mean) / y_sd;

    std::vector<std::size_t> sizes;
    sizes.push_back(x.cols);
    for (auto h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(1);
    const std::size_t layers = sizes.size() - 1;

    model.weights.resize(layers);
    model.bias.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        model.weights[l] = Matrix(sizes[l], sizes[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        for (auto& wv : model.weights[l].data) wv = (2.0 * rng.uniform() - 1.0) * bound;
        model.bias[l].assign(sizes[l + 1], 0.0);
    }

    std::vector<AdamState> w_state, b_state;
    for (std::size_t l = 0; l < layers; ++l) {
        w_state.emplace_back(model.weights[l].data.size());
        b_state.emplace_back(model.bias[l].size());
    }

    std::vector<Matrix> acts(layers + 1), zs(layers);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // forward
        acts[0] = x;
        for (std::size_t l = 0; l < layers; ++l) {
            Matrix z(n, sizes[l + 1], 0.0);
            kern::gemm_acc(n, sizes[l + 1], sizes[l], acts[l].data.data(), sizes[l],
                           model.weights[l].data.data(), sizes[l + 1], z.data.data(), z.cols);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < z.cols; ++j) z(i, j) += model.bias[l][j];
            zs[l] = z;
            if (l + 1 < layers)
                for (auto& v : z.data) v = activate(v, cfg.act);
            acts[l + 1] = std::move(z);
        }

        double loss = 0.0;
        Matrix delta(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = acts[layers](i, 0) - y[i];
            loss += r * r;
            delta(i, 0) = r * inv_n;
        }
        loss *= 0.5 * inv_n;
        if (!std::isfinite(loss))
            throw DivergenceError("mlp fit: loss diverged to a non-finite value");

        // backward
        for (std::size_t l = layers; l-- > 0;) {
            Matrix at = transpose(acts[l]);
            Matrix gw(sizes[l], sizes[l + 1], 0.0);
            kern::gemm_acc(sizes[l], sizes[l + 1], n, at.data.data(), n, delta.data.data(),
                           delta.cols, gw.data.data(), gw.cols);
            kern::axpy(cfg.alpha * inv_n, model.weights[l].data.data(), gw.data.data(),
                       gw.data.size());
            std::vector<double> gb(sizes[l + 1], 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < delta.cols; ++j) gb[j] += delta(i, j);

            if (l > 0) {
                Matrix wt = transpose(model.weights[l]);
                Matrix next(n, sizes[l], 0.0);
                kern::gemm_acc(n, sizes[l], sizes[l + 1], delta.data.data(), delta.cols,
                               wt.data.data(), wt.cols, next.data.data(), next.cols);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < sizes[l]; ++j)
                        next(i, j) *= activate_grad(zs[l - 1](i, j), cfg.act);
                delta = std::move(next);
            }

            adam_step(model.weights[l].data, gw.data, w_state[l], cfg.lr, epoch);
            adam_step(model.bias[l], gb, b_state[l], cfg.lr, epoch);
        }
    }
    return model;
}

MlpModel fit_mlp(const Matrix& x, const std::vector<double>& y, const MlpGrid& grid,
                 double val_fraction, Rng& rng) {
    if (grid.size() == 0) throw ConfigError("mlp fit: empty grid");

    std::vector<MlpConfig> configs;
    for (const auto& h : grid.hidden)
        for (auto a : grid.acts)
            for (double alpha : grid.alphas)
                for (int ep : grid.epochs)
                    configs.push_back(MlpConfig{h, a, alpha, ep, grid.lr});

    std::vector<std::uint64_t> seeds(configs.size() + 1);
    for (auto& s : seeds) s = rng.next();

    if (configs.size() == 1) {
        Rng r(seeds[0]);
        return fit_mlp_fixed(x, y, configs[0], r);
    }

    std::vector<std::uint32_t> train, val;
    split_indices(x.rows, val_fraction, rng, train, val);
    const Matrix xt = take_rows(x, train);
    const Matrix xv = take_rows(x, val);
    const auto yt = take(y, train);
    const auto yv = take(y, val);

    double best_mse = 0.0;
    std::size_t best = configs.size();
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        Rng r(seeds[ci]);
        const MlpModel m = fit_mlp_fixed(xt, yt, configs[ci], r);
        std::vector<double> pred;
        m.predict(xv, pred);
        double mse = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double rr = pred[i] - yv[i];
            mse += rr * rr;
        }
        if (best == configs.size() || mse < best_mse) {
            best_mse = mse;
            best = ci;
        }
    }
    Rng r(seeds.back());
    return fit_mlp_fixed(x, y, configs[best], r);
}

// ---------------------------------------------------------------------------
// cross-fitting

CrossFitPlan make_crossfit_plan(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || n < k) throw ConfigError("crossfit plan requires n >= k >= 2");
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    Rng rng(seed);
    rng.shuffle(perm);

    CrossFitPlan plan;
    plan.n = n;
    plan.seed = seed;
    plan.folds.resize(k);
    const std::size_t base = n / k, extra = n % k;
    std::size_t at = 0;
    for (std::size_t m = 0; m < k; ++m) {
        const std::size_t len = base + (m < extra ? 1 : 0);
        plan.folds[m].assign(perm.begin() + static_cast<std::ptrdiff_t>(at),
                             perm.begin() + static_cast<std::ptrdiff_t>(at + len));
        std::sort(plan.folds[m].begin(), plan.folds[m].end());
        at += len;
    }
    return plan;
}

Matrix expand_features(const Matrix& x, Expansion e) {
    if (e == Expansion::none) return x;
    std::vector<std::size_t> cont;
    for (std::size_t j = 0; j < x.cols; ++j)
        if (!column_is_binary(x, j)) cont.push_back(j);
    const std::size_t n_pairs =
        e == Expansion::quadratic ? x.cols * (x.cols - 1) / 2 : 0;
    Matrix out(x.rows, x.cols + cont.size() + n_pairs);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* src = x.row(i);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) dst[j] = src[j];
        std::size_t at = x.cols;
        for (std::size_t j = 0; j < cont.size(); ++j)
            dst[at++] = src[cont[j]] * src[cont[j]];
        if (e == Expansion::quadratic)
            for (std::size_t j = 0; j + 1 < x.cols; ++j)
                for (std::size_t k = j + 1; k < x.cols; ++k)
                    dst[at++] = src[j] * src[k];
    }
    return out;
}

NuisanceOptions NuisanceOptions::fast() {
    NuisanceOptions o;
    o.regressor = RegressorKind::ridge;
    o.expansion = Expansion::squares;
    o.regressor_expansion = Expansion::quadratic;
    return o;
}

void AnyRegressor::predict(const Matrix& x, std::vector<double>& out) const {
    std::visit([&](const auto& m) { m.predict(x, out); }, model);
}

AnyRegressor fit_regressor(const Matrix& x, const std::vector<double>& y,
                           const NuisanceOptions& opts, Rng& rng) {
    AnyRegressor r;
    if (opts.regressor == RegressorKind::ridge)
        r.model = fit_ridge(x, y, opts.ridge_grid, opts.val_fraction, rng);
    else
        r.model = fit_mlp(x, y, opts.mlp_grid, opts.val_fraction, rng);
    return r;
}

namespace {

std::vector<std::uint32_t> complement_of(const std::vector<std::uint32_t>& fold, std::size_t n) {
    std::vector<char> in_fold(n, 0);
    for (auto i : fold) in_fold[i] = 1;
    std::vector<std::uint32_t> out;
    out.reserve(n - fold.size());
    for (std::uint32_t i = 0; i < n; ++i)
        if (!in_fold[i]) out.push_back(i);
    return out;
}

void scatter(const std::vector<double>& vals, const std::vector<std::uint32_t>& idx,
             std::vector<double>& out) {
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = vals[i];
}

} // namespace

TransportNuisances crossfit_transport_nuisances(const Matrix& x,
                                                const std::vector<std::uint8_t>& s,
                                                const std::vector<std::uint8_t>& a,
                                                const std::vector<double>& y,
                                                const CrossFitPlan& plan,
                                                const NuisanceOptions& opts,
                                                std::uint64_t seed) {
    if (plan.n != x.rows) throw ConfigError("crossfit plan does not match the sample size");
    const Matrix xd = expand_features(x, opts.expansion);
    const std::size_t n = xd.rows;

    TransportNuisances out;
    out.g1.assign(n, 0.0);
    out.g0.assign(n, 0.0);
    out.e1.assign(n, 0.0);
    out.p.assign(n, 0.0);

    for (std::size_t m = 0; m < plan.folds.size(); ++m) {
        const auto& fold = plan.folds[m];
        const auto comp = complement_of(fold, n);

        std::vector<std::uint32_t> src, src1, src0;
        for (auto i : comp) {
            if (s[i]) {
                src.push_back(i);
                (a[i] ? src1 : src0).push_back(i);
            }
        }
        if (src.empty() || src.size() == comp.size())
            throw FoldError("crossfit: a training complement holds a single selection class");
        if (src1.empty() || src0.empty())
            throw FoldError("crossfit: a training complement is missing a treatment arm");

        const Matrix xf = take_rows(xd, fold);

        Rng rg1 = derive_rng(seed, {m, 1});
        const AnyRegressor g1 = fit_regressor(take_rows(xd, src1), take(y, src1), opts, rg1);
        Rng rg0 = derive_rng(seed, {m, 2});
        const AnyRegressor g0 = fit_regressor(take_rows(xd, src0), take(y, src0), opts, rg0);

        Rng re = derive_rng(seed, {m, 3});
        const LogisticModel e1 =
            fit_logistic(take_rows(xd, src), take(a, src), opts.logistic_grid, opts.val_fraction, re);
        Rng rp = derive_rng(seed, {m, 4});
        const LogisticModel p =
            fit_logistic(take_rows(xd, comp), take(s, comp), opts.logistic_grid, opts.val_fraction, rp);

        std::vector<double> pred;
        g1.predict(xf, pred);
        scatter(pred, fold, out.g1);
        g0.predict(xf, pred);
        scatter(pred, fold, out.g0);
        pred.resize(fold.size());
        for (std::size_t i = 0; i < fold.size(); ++i)
            pred[i] = e1.predict(xf.row(i), xf.cols, opts.eps_clip);
        scatter(pred, fold, out.e1);
        for (std::size_t i = 0; i < fold.size(); ++i)
            pred[i] = p.predict(xf.row(i), xf.cols, opts.eps_clip);
        scatter(pred, fold, out.p);
    }
    return out;
}

DrNuisances crossfit_dr_nuisances(const Matrix& x, const std::vector<std::uint8_t>& a,
                                  const std::vector<double>& y, const CrossFitPlan& plan,
                                  const NuisanceOptions& opts, std::uint64_t seed) {
    if (plan.n != x.rows) throw ConfigError("crossfit plan does not match the sample size");
    const Matrix xd = expand_features(x, opts.expansion);
    const std::size_t n = xd.rows;

    // outcome regression takes the treatment as its first input
    Matrix design(n, xd.cols + 1);
    for (std::size_t i = 0; i < n; ++i) {
        design(i, 0) = static_cast<double>(a[i]);
        const double* src = xd.row(i);
        double* dst = design.row(i) + 1;
        for (std::size_t j = 0; j < xd.cols; ++j) dst[j] = src[j];
    }

    DrNuisances out;
    out.mu1.assign(n, 0.0);
    out.mu0.assign(n, 0.0);
    out.s.assign(n, 0.0);

    for (std::size_t m = 0; m < plan.folds.size(); ++m) {
        const auto& fold = plan.folds[m];
        const auto comp = complement_of(fold, n);

        std::size_t treated = 0;
        for (auto i : comp) treated += a[i];
        if (treated == 0 || treated == comp.size())
            throw FoldError("crossfit: a training complement is missing a treatment arm");

        Rng rmu = derive_rng(seed, {m, 1});
        const AnyRegressor mu = fit_regressor(take_rows(design, comp), take(y, comp), opts, rmu);
        Rng rs = derive_rng(seed, {m, 2});
        const LogisticModel sm =
            fit_logistic(take_rows(xd, comp), take(a, comp), opts.logistic_grid, opts.val_fraction, rs);

        Matrix df = take_rows(design, fold);
        std::vector<double> pred;
        for (std::size_t i = 0; i < df.rows; ++i) df(i, 0) = 1.0;
        mu.predict(df, pred);
        scatter(pred, fold, out.mu1);
        for (std::size_t i = 0; i < df.rows; ++i) df(i, 0) = 0.0;
        mu.predict(df, pred);
        scatter(pred, fold, out.mu0);

        const Matrix xf = take_rows(xd, fold);
        pred.resize(fold.size());
        for (std::size_t i = 0; i < fold.size(); ++i)
            pred[i] = sm.predict(xf.row(i), xf.cols, opts.eps_clip);
        scatter(pred, fold, out.s);
    }
    return out;
}

} // namespace gatex
