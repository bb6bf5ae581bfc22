#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gatex/estimators.hpp"

namespace gatex {

struct ConfidenceInterval {
    int group = 0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;
};

struct IntervalSet {
    std::string method;
    double level = 0.0;
    std::vector<ConfidenceInterval> intervals;
    bool no_survivor = false; // set when the accepted set was empty
};

// point +/- z_{alpha'/2} * sigma / sqrt(N)
ConfidenceInterval estimator_ci(const GateEstimate& e, double alpha_prime);

struct MetaAnalysisResult {
    double pooled = 0.0;
    double pooled_var = 0.0;
    double tau_sq = 0.0;            // DerSimonian-Laird heterogeneity
    std::vector<double> weights;    // random-effects weights
};

// points with their squared standard errors (variances of the estimates, not
// the sqrt(N)-scaled asymptotic variances)
MetaAnalysisResult dl_meta(const std::vector<double>& points,
                           const std::vector<double>& variances);

using EstimatesByStudy = std::map<int, std::vector<GateEstimate>>;

// envelope of the accepted estimators' level 1-alpha/2 intervals
IntervalSet expcs(const std::set<int>& accepted, const EstimatesByStudy& estimates,
                  const std::set<int>& groups, double alpha);

// random-effects meta-analysis over the accepted estimators, level 1-alpha
IntervalSet exocs(const std::set<int>& accepted, const EstimatesByStudy& estimates,
                  const std::set<int>& groups, double alpha);

// meta-analysis over every study, no falsification
IntervalSet meta_analysis(const EstimatesByStudy& estimates, const std::set<int>& groups,
                          double alpha);

// envelope of the level 1-alpha intervals of every study, no falsification
IntervalSet simple_union(const EstimatesByStudy& estimates, const std::set<int>& groups,
                         double alpha);

// tidy rows: method, group, lower, upper, level
void write_intervals_csv(const std::string& path, const std::vector<IntervalSet>& sets);

} // namespace gatex
