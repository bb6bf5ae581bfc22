#include "gatex/falsify.hpp"

#include <cmath>
#include <sstream>

#include "gatex/errors.hpp"
#include "gatex/stats.hpp"

namespace gatex {

TestStatistic test_statistic(const GateEstimate& obs, const GateEstimate& rct,
                             double mu_offset) {
    if (obs.group != rct.group)
        throw EstimationError("test_statistic: estimates refer to different groups");
    if (!std::isfinite(obs.asym_var) || !std::isfinite(rct.asym_var))
        throw DegenerateVarianceError("test_statistic: non-finite variance");
    const double s2 = obs.asym_var / static_cast<double>(obs.n_used) +
                      rct.asym_var / static_cast<double>(rct.n_used);
    if (s2 <= 0.0) {
        std::ostringstream os;
        os << "test_statistic: degenerate variance for estimator " << obs.estimator_id
           << ", group " << obs.group;
        throw DegenerateVarianceError(os.str());
    }
    TestStatistic t;
    t.estimator_id = obs.estimator_id;
    t.group = obs.group;
    t.se = std::sqrt(s2);
    t.mu_offset = mu_offset;
    t.obs_point = obs.point;
    t.rct_point = rct.point;
    t.t_value = (obs.point - rct.point - mu_offset) / t.se;
    return t;
}

double falsification_threshold(double alpha, int i_r_size) {
    if (i_r_size <= 0) throw ConfigError("falsification threshold needs |I_R| >= 1");
    return stats::normal_quantile(1.0 - alpha / (4.0 * static_cast<double>(i_r_size)));
}

std::set<int> gate_estimators(const std::map<int, std::vector<TestStatistic>>& tests,
                              double alpha, int i_r_size) {
    const double z = falsification_threshold(alpha, i_r_size);
    std::set<int> accepted;
    for (const auto& [k, stats_k] : tests) {
        bool ok = static_cast<int>(stats_k.size()) == i_r_size;
        for (const auto& t : stats_k)
            if (std::abs(t.t_value) > z) ok = false;
        if (ok) accepted.insert(k);
    }
    return accepted;
}

FalsificationReport falsify(const std::map<int, std::vector<GateEstimate>>& validation_estimates,
                            const std::vector<GateEstimate>& rct_estimates,
                            const std::set<int>& validation_groups, double alpha) {
    FalsificationReport report;
    report.alpha = alpha;
    report.i_r_size = static_cast<int>(validation_groups.size());
    report.threshold = falsification_threshold(alpha, report.i_r_size);

    for (const auto& [k, ests] : validation_estimates) {
        std::vector<TestStatistic> stats_k;
        for (int gi : validation_groups) {
            const GateEstimate* obs = nullptr;
            const GateEstimate* rct = nullptr;
            for (const auto& e : ests)
                if (e.group == gi) obs = &e;
            for (const auto& e : rct_estimates)
                if (e.group == gi) rct = &e;
            if (!obs || !rct) {
                std::ostringstream os;
                os << "falsify: estimator " << k << " lacks an estimate for validation group "
                   << gi;
                throw EstimationError(os.str());
            }
            stats_k.push_back(test_statistic(*obs, *rct, 0.0));
        }
        report.tests.emplace(k, std::move(stats_k));
    }
    report.accepted = gate_estimators(report.tests, alpha, report.i_r_size);
    return report;
}

double asymptotic_power(double mu_over_sigma, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("asymptotic_power: alpha in (0,1)");
    const double z = stats::normal_quantile(1.0 - alpha / 2.0);
    return 1.0 - stats::normal_cdf(mu_over_sigma + z) + stats::normal_cdf(mu_over_sigma - z);
}

} // namespace gatex
