#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gatex/dataset.hpp"
#include "gatex/nuisance.hpp"

namespace gatex {

// Per-group effect estimate. asym_var follows the sqrt(N)-scaling convention:
// it estimates the variance of sqrt(n_used) * (point - truth), so the standard
// error is sqrt(asym_var / n_used).
struct GateEstimate {
    int estimator_id = 0; // 0 is the RCT estimator
    int group = 0;
    double point = 0.0;
    double asym_var = 0.0;
    std::int64_t n_used = 0;
    bool low_n = false;

    double se() const;
};

// Difference of inverse-frequency weighted means per group, with the overall
// treated fraction as the propensity.
std::vector<GateEstimate> rct_gate(const Dataset& rct, int group_count, int estimator_id = 0);

// OLS of scores on group dummies: coefficients are group means; the diagonal
// of the heteroskedasticity-robust sandwich supplies the variances.
struct GroupOls {
    std::vector<double> tau;
    std::vector<double> omega_diag;
};
GroupOls group_ols_sandwich(const std::vector<double>& scores, const std::vector<int>& groups,
                            int group_count);

std::vector<double> dr_scores(const std::vector<double>& y, const std::vector<std::uint8_t>& a,
                              const DrNuisances& nu);

std::vector<GateEstimate> dr_gate_from_scores(const std::vector<double>& scores,
                                              const std::vector<int>& groups, int group_count,
                                              int estimator_id);

std::vector<GateEstimate> dr_score_gate(const Dataset& obs, int group_count,
                                        std::size_t k_folds, const NuisanceOptions& opts,
                                        std::uint64_t seed, int estimator_id);

// ---------------------------------------------------------------------------
// transported estimator over the validation groups

struct PooledSample {
    Matrix x;
    std::vector<std::string> names;
    std::vector<std::uint8_t> s; // 0 = target (RCT), 1 = observational source
    std::vector<std::uint8_t> a;
    std::vector<double> y;
    std::vector<int> g;
    std::vector<std::int32_t> base_row; // kept when both inputs carry provenance
};

// Rows of both datasets restricted to the validation groups, covariates
// restricted to the columns the two datasets share (by name, source order).
PooledSample pool_validation(const Dataset& rct, const Dataset& obs,
                             const std::set<int>& validation_groups);

// empirical P(S=0 | G=i) on the pooled sample, indexed by group id
std::vector<double> empirical_pi_g(const PooledSample& pooled, int group_count);

std::vector<double> transported_scores(const PooledSample& pooled,
                                       const TransportNuisances& nu,
                                       const std::vector<double>& pi_g);

std::vector<GateEstimate> transported_gate_from_nuisances(const PooledSample& pooled,
                                                          const TransportNuisances& nu,
                                                          int group_count, int estimator_id);

std::vector<GateEstimate> transported_gate(const Dataset& rct, const Dataset& obs,
                                           const std::set<int>& validation_groups,
                                           int group_count, std::size_t k_folds,
                                           const NuisanceOptions& opts, std::uint64_t seed,
                                           int estimator_id);

} // namespace gatex
