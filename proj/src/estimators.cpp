#include "gatex/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gatex/errors.hpp"
#include "gatex/stats.hpp"

namespace gatex {

double GateEstimate::se() const {
    return std::sqrt(asym_var / static_cast<double>(n_used));
}

namespace {

std::vector<std::vector<std::uint32_t>> rows_by_group(const std::vector<int>& g,
                                                      int group_count) {
    std::vector<std::vector<std::uint32_t>> out(static_cast<std::size_t>(group_count));
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] < 0 || g[i] >= group_count)
            throw EstimationError("row with unassigned or out-of-range group id");
        out[static_cast<std::size_t>(g[i])].push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

GateEstimate mean_signal_estimate(const std::vector<double>& signal,
                                  const std::vector<std::uint32_t>& rows, int group,
                                  int estimator_id) {
    std::vector<double> values(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) values[i] = signal[rows[i]];
    GateEstimate e;
    e.estimator_id = estimator_id;
    e.group = group;
    e.point = stats::mean(values);
    e.asym_var = stats::sample_var(values);
    e.n_used = static_cast<std::int64_t>(rows.size());
    e.low_n = rows.size() < 20;
    return e;
}

} // namespace

std::vector<GateEstimate> rct_gate(const Dataset& rct, int group_count, int estimator_id) {
    const std::size_t n = rct.n();
    std::size_t treated = 0;
    for (auto v : rct.a) treated += v;
    if (treated == 0 || treated == n)
        throw EstimationError("rct_gate: a treatment arm is empty");
    const double p_hat = static_cast<double>(treated) / static_cast<double>(n);

    const auto by_group = rows_by_group(rct.g, group_count);
    for (int gi = 0; gi < group_count; ++gi) {
        const auto& rows = by_group[static_cast<std::size_t>(gi)];
        if (rows.empty()) continue;
        std::size_t t = 0;
        for (auto r : rows) t += rct.a[r];
        if (t < 2 || rows.size() - t < 2) {
            std::ostringstream os;
            os << "rct_gate: group " << gi << " needs at least 2 treated and 2 control rows";
            throw EstimationError(os.str());
        }
    }

    (void)p_hat;
    // Stratified difference of arm means: within each group this equals the
    // weighted-signal mean with the group-level treated fraction, and the
    // outcome level cancels exactly, so the classic two-arm variance applies.
    std::vector<GateEstimate> out;
    for (int gi = 0; gi < group_count; ++gi) {
        const auto& rows = by_group[static_cast<std::size_t>(gi)];
        if (rows.empty()) continue;
        std::vector<double> y1, y0;
        for (auto r : rows) (rct.a[r] ? y1 : y0).push_back(rct.y[r]);
        const double pg = static_cast<double>(y1.size()) / static_cast<double>(rows.size());
        GateEstimate e;
        e.estimator_id = estimator_id;
        e.group = gi;
        e.point = stats::mean(y1) - stats::mean(y0);
        e.asym_var = stats::sample_var(y1) / pg + stats::sample_var(y0) / (1.0 - pg);
        e.n_used = static_cast<std::int64_t>(rows.size());
        e.low_n = rows.size() < 20;
        out.push_back(e);
    }
    return out;
}

GroupOls group_ols_sandwich(const std::vector<double>& scores, const std::vector<int>& groups,
                            int group_count) {
    const auto by_group = rows_by_group(groups, group_count);
    const double n = static_cast<double>(scores.size());
    GroupOls res;
    res.tau.resize(static_cast<std::size_t>(group_count));
    res.omega_diag.resize(static_cast<std::size_t>(group_count));
    for (int gi = 0; gi < group_count; ++gi) {
        const auto& rows = by_group[static_cast<std::size_t>(gi)];
        if (rows.empty())
            throw EstimationError("group dummy regression: empty group " + std::to_string(gi));
        double sum = 0.0;
        for (auto r : rows) sum += scores[r];
        const double tau = sum / static_cast<double>(rows.size());
        double rss = 0.0;
        for (auto r : rows) {
            const double resid = scores[r] - tau;
            rss += resid * resid;
        }
        const double ng = static_cast<double>(rows.size());
        res.tau[static_cast<std::size_t>(gi)] = tau;
        // (G'G/N)^-1 (sum G G' r^2 / N) (G'G/N)^-1 is diagonal for dummies
        res.omega_diag[static_cast<std::size_t>(gi)] = n * rss / (ng * ng);
    }
    return res;
}

std::vector<double> dr_scores(const std::vector<double>& y, const std::vector<std::uint8_t>& a,
                              const DrNuisances& nu) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double s = nu.s[i];
        out[i] = nu.mu1[i] - nu.mu0[i] +
                 (a[i] ? (y[i] - nu.mu1[i]) / s : -(y[i] - nu.mu0[i]) / (1.0 - s));
    }
    return out;
}

std::vector<GateEstimate> dr_gate_from_scores(const std::vector<double>& scores,
                                              const std::vector<int>& groups, int group_count,
                                              int estimator_id) {
    const GroupOls ols = group_ols_sandwich(scores, groups, group_count);
    const auto sizes = [&] {
        std::vector<std::int64_t> c(static_cast<std::size_t>(group_count), 0);
        for (int gi : groups) ++c[static_cast<std::size_t>(gi)];
        return c;
    }();
    std::vector<GateEstimate> out;
    for (int gi = 0; gi < group_count; ++gi) {
        GateEstimate e;
        e.estimator_id = estimator_id;
        e.group = gi;
        e.point = ols.tau[static_cast<std::size_t>(gi)];
        e.asym_var = ols.omega_diag[static_cast<std::size_t>(gi)];
        e.n_used = static_cast<std::int64_t>(scores.size());
        e.low_n = sizes[static_cast<std::size_t>(gi)] < 20;
        out.push_back(e);
    }
    return out;
}

std::vector<GateEstimate> dr_score_gate(const Dataset& obs, int group_count,
                                        std::size_t k_folds, const NuisanceOptions& opts,
                                        std::uint64_t seed, int estimator_id) {
    const CrossFitPlan plan = make_crossfit_plan(obs.n(), k_folds, derive_seed(seed, {0}));
    const DrNuisances nu = crossfit_dr_nuisances(obs.x, obs.a, obs.y, plan, opts,
                                                 derive_seed(seed, {1}));
    return dr_gate_from_scores(dr_scores(obs.y, obs.a, nu), obs.g, group_count, estimator_id);
}

// ---------------------------------------------------------------------------
// transported estimator

PooledSample pool_validation(const Dataset& rct, const Dataset& obs,
                             const std::set<int>& validation_groups) {
    std::vector<int> rct_cols, obs_cols;
    PooledSample pooled;
    for (std::size_t j = 0; j < obs.names.size(); ++j) {
        const int rj = rct.col(obs.names[j]);
        if (rj < 0) continue;
        obs_cols.push_back(static_cast<int>(j));
        rct_cols.push_back(rj);
        pooled.names.push_back(obs.names[j]);
    }
    if (pooled.names.empty())
        throw TransportError("pool_validation: the datasets share no covariate columns");

    const bool keep_rows = !rct.base_row.empty() && !obs.base_row.empty();
    std::vector<std::uint32_t> rct_rows, obs_rows;
    for (std::size_t i = 0; i < rct.n(); ++i)
        if (validation_groups.count(rct.g[i])) rct_rows.push_back(static_cast<std::uint32_t>(i));
    for (std::size_t i = 0; i < obs.n(); ++i)
        if (validation_groups.count(obs.g[i])) obs_rows.push_back(static_cast<std::uint32_t>(i));

    const std::size_t n = rct_rows.size() + obs_rows.size();
    pooled.x = Matrix(n, pooled.names.size());
    pooled.s.resize(n);
    pooled.a.resize(n);
    pooled.y.resize(n);
    pooled.g.resize(n);
    if (keep_rows) pooled.base_row.resize(n);

    std::size_t at = 0;
    for (auto r : rct_rows) {
        for (std::size_t j = 0; j < rct_cols.size(); ++j)
            pooled.x(at, j) = rct.x(r, static_cast<std::size_t>(rct_cols[j]));
        pooled.s[at] = 0;
        pooled.a[at] = rct.a[r];
        pooled.y[at] = rct.y[r];
        pooled.g[at] = rct.g[r];
        if (keep_rows) pooled.base_row[at] = rct.base_row[r];
        ++at;
    }
    for (auto r : obs_rows) {
        for (std::size_t j = 0; j < obs_cols.size(); ++j)
            pooled.x(at, j) = obs.x(r, static_cast<std::size_t>(obs_cols[j]));
        pooled.s[at] = 1;
        pooled.a[at] = obs.a[r];
        pooled.y[at] = obs.y[r];
        pooled.g[at] = obs.g[r];
        if (keep_rows) pooled.base_row[at] = obs.base_row[r];
        ++at;
    }
    return pooled;
}

std::vector<double> empirical_pi_g(const PooledSample& pooled, int group_count) {
    std::vector<double> target(static_cast<std::size_t>(group_count), 0.0);
    std::vector<double> total(static_cast<std::size_t>(group_count), 0.0);
    for (std::size_t i = 0; i < pooled.g.size(); ++i) {
        total[static_cast<std::size_t>(pooled.g[i])] += 1.0;
        if (pooled.s[i] == 0) target[static_cast<std::size_t>(pooled.g[i])] += 1.0;
    }
    std::vector<double> pi(static_cast<std::size_t>(group_count), -1.0);
    for (int gi = 0; gi < group_count; ++gi) {
        const auto u = static_cast<std::size_t>(gi);
        if (total[u] == 0.0) continue;
        if (target[u] == 0.0 || target[u] == total[u]) {
            std::ostringstream os;
            os << "transported_gate: group " << gi
               << " is present on only one side of the pooled sample";
            throw TransportError(os.str());
        }
        pi[u] = target[u] / total[u];
    }
    return pi;
}

std::vector<double> transported_scores(const PooledSample& pooled,
                                       const TransportNuisances& nu,
                                       const std::vector<double>& pi_g) {
    const std::size_t n = pooled.y.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = nu.p[i];
        const double e1 = nu.e1[i];
        const double e0 = 1.0 - e1;
        const double odds = (1.0 - p) / p;
        double y1, y0;
        if (pooled.s[i]) {
            y1 = pooled.a[i] ? odds / e1 * (pooled.y[i] - nu.g1[i]) : 0.0;
            y0 = pooled.a[i] ? 0.0 : odds / e0 * (pooled.y[i] - nu.g0[i]);
        } else {
            y1 = nu.g1[i];
            y0 = nu.g0[i];
        }
        out[i] = (y1 - y0) / pi_g[static_cast<std::size_t>(pooled.g[i])];
    }
    return out;
}

std::vector<GateEstimate> transported_gate_from_nuisances(const PooledSample& pooled,
                                                          const TransportNuisances& nu,
                                                          int group_count, int estimator_id) {
    const std::vector<double> pi_g = empirical_pi_g(pooled, group_count);
    const std::vector<double> scores = transported_scores(pooled, nu, pi_g);

    const auto by_group = rows_by_group(pooled.g, group_count);
    std::vector<GateEstimate> out;
    for (int gi = 0; gi < group_count; ++gi) {
        const auto& rows = by_group[static_cast<std::size_t>(gi)];
        if (rows.empty()) continue;
        GateEstimate e = mean_signal_estimate(scores, rows, gi, estimator_id);
        // The raw score variance includes a tau^2 (1-pi)/pi term coming from
        // the 1/pi_g normalization that the group-count ratio cancels in the
        // estimator itself; the asymptotic variance of the group mean removes
        // it (it equals (sigma^2 - pi(1-pi) tau^2) / (pi^2 P(G=i)) after the
        // sqrt(N) change of scale).
        const double pig = pi_g[static_cast<std::size_t>(gi)];
        const double level = (1.0 - pig) / pig * e.point * e.point;
        e.asym_var = std::max(e.asym_var - level, 0.01 * e.asym_var);
        out.push_back(e);
    }
    return out;
}

std::vector<GateEstimate> transported_gate(const Dataset& rct, const Dataset& obs,
                                           const std::set<int>& validation_groups,
                                           int group_count, std::size_t k_folds,
                                           const NuisanceOptions& opts, std::uint64_t seed,
                                           int estimator_id) {
    const PooledSample pooled = pool_validation(rct, obs, validation_groups);
    empirical_pi_g(pooled, group_count); // fail fast on one-sided groups
    const CrossFitPlan plan =
        make_crossfit_plan(pooled.y.size(), k_folds, derive_seed(seed, {0}));
    const TransportNuisances nu = crossfit_transport_nuisances(
        pooled.x, pooled.s, pooled.a, pooled.y, plan, opts, derive_seed(seed, {1}));
    return transported_gate_from_nuisances(pooled, nu, group_count, estimator_id);
}

} // namespace gatex
