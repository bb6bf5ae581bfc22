#pragma once

#include <map>
#include <set>
#include <vector>

#include "gatex/estimators.hpp"

namespace gatex {

struct TestStatistic {
    int estimator_id = 0;
    int group = 0;
    double t_value = 0.0;
    double se = 0.0;        // pooled standard error of the difference
    double mu_offset = 0.0; // 0 for the null test
    double obs_point = 0.0;
    double rct_point = 0.0;
};

// z test of an observational validation-effect estimate against the RCT one
TestStatistic test_statistic(const GateEstimate& obs, const GateEstimate& rct,
                             double mu_offset);

// quantile 1 - alpha / (4 * |I_R|), the per-test acceptance cut
double falsification_threshold(double alpha, int i_r_size);

// estimators whose statistics all clear the Bonferroni-corrected threshold
std::set<int> gate_estimators(const std::map<int, std::vector<TestStatistic>>& tests,
                              double alpha, int i_r_size);

struct FalsificationReport {
    double alpha = 0.0;
    int i_r_size = 0;
    double threshold = 0.0;
    std::map<int, std::vector<TestStatistic>> tests;
    std::set<int> accepted;
};

// full loop over candidate estimators: one test per validation group each
FalsificationReport falsify(const std::map<int, std::vector<GateEstimate>>& validation_estimates,
                            const std::vector<GateEstimate>& rct_estimates,
                            const std::set<int>& validation_groups, double alpha);

// probability of rejecting at a fixed standardized bias
double asymptotic_power(double mu_over_sigma, double alpha);

} // namespace gatex
