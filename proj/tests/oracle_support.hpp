#pragma once

// Test-side oracles: closed-form nuisance functionals of the data generating
// process and the superpopulation quantities of the pooled validation sample.
// Kept out of the library on purpose; the estimators under test never see
// these formulas.

#include <cmath>
#include <map>
#include <vector>

#include "gatex/estimators.hpp"
#include "gatex/simgen.hpp"
#include "gatex/stats.hpp"

namespace oracle {

using namespace gatex;

// log f(z | A=1) / f(z | A=0) for one continuous confounder;
// f_a = (0.25 + 0.5 a) N(3,1) + (0.75 - 0.5 a) N(0,1)
inline double cont_logratio(double z) {
    const double phi3 = std::exp(-0.5 * (z - 3.0) * (z - 3.0));
    const double phi0 = std::exp(-0.5 * z * z);
    return std::log(0.75 * phi3 + 0.25 * phi0) - std::log(0.25 * phi3 + 0.75 * phi0);
}

inline double bin_logratio(double z) {
    return z != 0.0 ? std::log(3.0) : -std::log(3.0);
}

// true P(A=1 | confounders) in the observational studies (A prior is 1/2)
inline double true_e1(const double* z, int m_cont, int m_bin) {
    double t = 0.0;
    for (int j = 0; j < m_cont; ++j) t += cont_logratio(z[j]);
    for (int j = 0; j < m_bin; ++j) t += bin_logratio(z[m_cont + j]);
    return stats::sigmoid(t);
}

// superpopulation of the pooled validation sample (RCT rows vs w-weighted
// married observational rows)
struct PooledPop {
    double pi1 = 0.0; // P(S = 1)
    std::map<int, double> pi_g;    // P(S=0 | G=i)
    std::map<int, double> p_group; // P(G=i)
    double w_married_total = 0.0;
    std::size_t n_married = 0;
};

inline PooledPop pooled_population(const BaseTable& base, const DgpConfig& cfg) {
    PooledPop pop;
    double w_total = 0.0;
    std::map<int, double> w_married_group;
    std::map<int, std::size_t> n_married_group;
    for (std::size_t i = 0; i < base.x.rows; ++i) w_total += base.weights[i];
    for (auto r : base.married_rows) {
        pop.w_married_total += base.weights[r];
        w_married_group[base.group[r]] += base.weights[r];
        ++n_married_group[base.group[r]];
    }
    pop.n_married = base.married_rows.size();
    const double e_obs = cfg.upsample * static_cast<double>(base.x.rows) *
                         (pop.w_married_total / w_total);
    pop.pi1 = e_obs / (e_obs + static_cast<double>(pop.n_married));
    for (const auto& [gi, nm] : n_married_group) {
        const double p_g_s0 = static_cast<double>(nm) / static_cast<double>(pop.n_married);
        const double p_g_s1 = w_married_group[gi] / pop.w_married_total;
        pop.p_group[gi] = (1.0 - pop.pi1) * p_g_s0 + pop.pi1 * p_g_s1;
        pop.pi_g[gi] = (1.0 - pop.pi1) * p_g_s0 / pop.p_group[gi];
    }
    return pop;
}

// P(S=1 | base row t) on the pooled validation sample
inline double true_p_row(const BaseTable& base, const PooledPop& pop, std::int32_t row) {
    const double u = base.weights[static_cast<std::size_t>(row)] / pop.w_married_total;
    const double v = 1.0 / static_cast<double>(pop.n_married);
    return pop.pi1 * u / (pop.pi1 * u + (1.0 - pop.pi1) * v);
}

// DGP-exact nuisances for a pooled sample generated without concealment;
// requires base-row provenance and the z columns in generation order
inline TransportNuisances exact_transport_nuisances(const PooledSample& pooled,
                                                    const BaseTable& base,
                                                    const OutcomeParams& params,
                                                    const DgpConfig& cfg,
                                                    const PooledPop& pop, double eps_clip) {
    const std::size_t mx = base.x.cols;
    const std::size_t mz = static_cast<std::size_t>(cfg.m_cont + cfg.m_bin);
    TransportNuisances nu;
    const std::size_t n = pooled.y.size();
    nu.g1.resize(n);
    nu.g0.resize(n);
    nu.e1.resize(n);
    nu.p.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = pooled.x.row(i);
        const double* z = x + mx;
        nu.g1[i] = y1_mean(x, mx, z, mz, params);
        nu.g0[i] = y0_mean(x, mx, z, mz, params);
        nu.e1[i] = stats::clip(true_e1(z, cfg.m_cont, cfg.m_bin), eps_clip, 1.0 - eps_clip);
        nu.p[i] = stats::clip(true_p_row(base, pop, pooled.base_row[i]), eps_clip,
                              1.0 - eps_clip);
    }
    return nu;
}

// effect of a base row; the confounder term cancels between the two surfaces
inline double row_effect(const BaseTable& base, const OutcomeParams& params, std::size_t row) {
    std::vector<double> z(params.gamma.size(), 0.0);
    return y1_mean(base.x.row(row), base.x.cols, z.data(), z.size(), params) -
           y0_mean(base.x.row(row), base.x.cols, z.data(), z.size(), params);
}

// exact validation-group effect: plain average over the married rows
inline double exact_validation_tau(const BaseTable& base, const OutcomeParams& params,
                                   int group) {
    double sum = 0.0;
    std::size_t n = 0;
    for (auto r : base.married_rows) {
        if (base.group[r] != group) continue;
        sum += row_effect(base, params, r);
        ++n;
    }
    return sum / static_cast<double>(n);
}

// one draw of (group, unweighted signal) from the pooled superpopulation,
// with the clipped exact nuisances plugged in
struct SignalDraw {
    int group = 0;
    double value = 0.0;
};

inline SignalDraw draw_pooled_signal(const BaseTable& base, const OutcomeParams& params,
                                     const DgpConfig& cfg, const PooledPop& pop,
                                     const std::vector<double>& married_cum_weights,
                                     double eps_clip, Rng& rng) {
    const bool source = rng.bernoulli(pop.pi1);
    std::size_t pick;
    if (source) {
        const double u = rng.uniform() * married_cum_weights.back();
        pick = static_cast<std::size_t>(
            std::upper_bound(married_cum_weights.begin(), married_cum_weights.end(), u) -
            married_cum_weights.begin());
        if (pick >= base.married_rows.size()) pick = base.married_rows.size() - 1;
    } else {
        pick = static_cast<std::size_t>(rng.uniform_int(base.married_rows.size()));
    }
    const std::uint32_t row = base.married_rows[pick];

    std::vector<std::uint8_t> a{rng.bernoulli(0.5) ? std::uint8_t{1} : std::uint8_t{0}};
    const Matrix z = synthesize_confounders(1, a, cfg.m_cont, cfg.m_bin, !source, rng);
    const double* zp = z.row(0);
    const std::size_t mz = z.cols;

    const double g1 = y1_mean(base.x.row(row), base.x.cols, zp, mz, params);
    const double g0 = y0_mean(base.x.row(row), base.x.cols, zp, mz, params);
    const double y = (a[0] ? g1 : g0) + rng.normal();

    SignalDraw out;
    out.group = base.group[row];
    if (!source) {
        out.value = g1 - g0;
        return out;
    }
    const double e1 =
        stats::clip(true_e1(zp, cfg.m_cont, cfg.m_bin), eps_clip, 1.0 - eps_clip);
    const double p = stats::clip(true_p_row(base, pop, static_cast<std::int32_t>(row)),
                                 eps_clip, 1.0 - eps_clip);
    const double ga = a[0] ? g1 : g0;
    out.value = (1.0 - p) / p * (static_cast<double>(a[0]) - e1) * (y - ga) / (e1 * (1.0 - e1));
    return out;
}

// One iid pooled validation sample of the theorem's sampling model: S drawn
// per row, target rows uniform over the married base rows, source rows
// w-weighted, confounders by the S-specific law. (The simulated RCT itself is
// a census of the married rows, which has strictly less covariate variation
// than the iid model the asymptotic variance describes.)
inline PooledSample draw_pooled_sample(const BaseTable& base, const OutcomeParams& params,
                                       const DgpConfig& cfg, const PooledPop& pop,
                                       const std::vector<double>& married_cum, std::size_t n,
                                       Rng& rng) {
    const std::size_t mx = base.x.cols;
    const std::size_t mz = static_cast<std::size_t>(cfg.m_cont + cfg.m_bin);
    PooledSample p;
    p.names = base.names;
    for (std::size_t j = 0; j < mz; ++j) p.names.push_back("z" + std::to_string(j + 1));
    p.x = Matrix(n, mx + mz);
    p.s.resize(n);
    p.a.resize(n);
    p.y.resize(n);
    p.g.resize(n);
    p.base_row.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool source = rng.bernoulli(pop.pi1);
        std::size_t pick;
        if (source) {
            const double u = rng.uniform() * married_cum.back();
            pick = static_cast<std::size_t>(
                std::upper_bound(married_cum.begin(), married_cum.end(), u) -
                married_cum.begin());
            if (pick >= base.married_rows.size()) pick = base.married_rows.size() - 1;
        } else {
            pick = static_cast<std::size_t>(rng.uniform_int(base.married_rows.size()));
        }
        const std::uint32_t row = base.married_rows[pick];
        std::vector<std::uint8_t> a1{rng.bernoulli(0.5) ? std::uint8_t{1} : std::uint8_t{0}};
        const Matrix z = synthesize_confounders(1, a1, cfg.m_cont, cfg.m_bin, !source, rng);
        double* dst = p.x.row(i);
        const double* src = base.x.row(row);
        for (std::size_t j = 0; j < mx; ++j) dst[j] = src[j];
        for (std::size_t j = 0; j < mz; ++j) dst[mx + j] = z(0, j);
        p.s[i] = source ? 1 : 0;
        p.a[i] = a1[0];
        const double m = p.a[i] ? y1_mean(src, mx, z.row(0), mz, params)
                                : y0_mean(src, mx, z.row(0), mz, params);
        p.y[i] = m + rng.normal();
        p.g[i] = base.group[row];
        p.base_row[i] = static_cast<std::int32_t>(row);
    }
    return p;
}

// cumulative weights over the married rows, for the S=1 component
inline std::vector<double> married_cum_weights(const BaseTable& base) {
    std::vector<double> cum;
    cum.reserve(base.married_rows.size());
    double acc = 0.0;
    for (auto r : base.married_rows) {
        acc += base.weights[r];
        cum.push_back(acc);
    }
    return cum;
}

// chi-square CDF with one degree of freedom
inline double chi2_cdf_1df(double x) {
    return std::erf(std::sqrt(0.5 * x));
}

} // namespace oracle
