#include "gatex/combine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gatex/csv.hpp"
#include "gatex/errors.hpp"
#include "gatex/stats.hpp"

namespace gatex {

ConfidenceInterval estimator_ci(const GateEstimate& e, double alpha_prime) {
    if (!std::isfinite(e.asym_var) || e.n_used < 1)
        throw EstimationError("estimator_ci: invalid estimate");
    const double z = stats::normal_quantile(1.0 - alpha_prime / 2.0);
    const double half = z * e.se();
    return ConfidenceInterval{e.group, e.point - half, e.point + half, 1.0 - alpha_prime};
}

MetaAnalysisResult dl_meta(const std::vector<double>& points,
                           const std::vector<double>& variances) {
    const std::size_t k = points.size();
    if (k < 2 || variances.size() != k)
        throw MetaError("dl_meta: needs at least 2 studies with matching variances");
    for (double v : variances)
        if (!(v > 0.0)) throw MetaError("dl_meta: variances must be positive");

    double w_sum = 0.0, w_sq_sum = 0.0, wx_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double w = 1.0 / variances[i];
        w_sum += w;
        w_sq_sum += w * w;
        wx_sum += w * points[i];
    }
    const double fixed_mean = wx_sum / w_sum;
    double q = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = points[i] - fixed_mean;
        q += d * d / variances[i];
    }
    const double c = w_sum - w_sq_sum / w_sum;
    const double tau_sq = std::max(0.0, (q - (static_cast<double>(k) - 1.0)) / c);

    MetaAnalysisResult res;
    res.tau_sq = tau_sq;
    res.weights.resize(k);
    double ws = 0.0, wxs = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        res.weights[i] = 1.0 / (variances[i] + tau_sq);
        ws += res.weights[i];
        wxs += res.weights[i] * points[i];
    }
    res.pooled = wxs / ws;
    res.pooled_var = 1.0 / ws;
    return res;
}

namespace {

const GateEstimate& find_estimate(const EstimatesByStudy& estimates, int k, int group) {
    const auto it = estimates.find(k);
    if (it != estimates.end())
        for (const auto& e : it->second)
            if (e.group == group) return e;
    std::ostringstream os;
    os << "combine: no estimate for estimator " << k << ", group " << group;
    throw EstimationError(os.str());
}

IntervalSet envelope(const std::set<int>& ids, const EstimatesByStudy& estimates,
                     const std::set<int>& groups, double alpha_per_estimator,
                     double reported_level, const std::string& method) {
    IntervalSet out;
    out.method = method;
    out.level = reported_level;
    for (int gi : groups) {
        ConfidenceInterval env{gi, 0.0, 0.0, reported_level};
        bool first = true;
        for (int k : ids) {
            const ConfidenceInterval ci =
                estimator_ci(find_estimate(estimates, k, gi), alpha_per_estimator);
            if (first || ci.lower < env.lower) env.lower = ci.lower;
            if (first || ci.upper > env.upper) env.upper = ci.upper;
            first = false;
        }
        out.intervals.push_back(env);
    }
    return out;
}

IntervalSet meta_over(const std::set<int>& ids, const EstimatesByStudy& estimates,
                      const std::set<int>& groups, double alpha, const std::string& method) {
    IntervalSet out;
    out.method = method;
    out.level = 1.0 - alpha;
    for (int gi : groups) {
        if (ids.size() == 1) {
            // a single surviving study degrades to its own interval
            out.intervals.push_back(estimator_ci(find_estimate(estimates, *ids.begin(), gi), alpha));
            continue;
        }
        std::vector<double> points, variances;
        for (int k : ids) {
            const GateEstimate& e = find_estimate(estimates, k, gi);
            points.push_back(e.point);
            // boundary conversion: meta-analysis consumes squared standard errors
            variances.push_back(e.asym_var / static_cast<double>(e.n_used));
        }
        const MetaAnalysisResult meta = dl_meta(points, variances);
        const double z = stats::normal_quantile(1.0 - alpha / 2.0);
        const double half = z * std::sqrt(meta.pooled_var);
        out.intervals.push_back(
            ConfidenceInterval{gi, meta.pooled - half, meta.pooled + half, 1.0 - alpha});
    }
    return out;
}

std::set<int> all_ids(const EstimatesByStudy& estimates) {
    std::set<int> ids;
    for (const auto& [k, v] : estimates) ids.insert(k);
    return ids;
}

} // namespace

IntervalSet expcs(const std::set<int>& accepted, const EstimatesByStudy& estimates,
                  const std::set<int>& groups, double alpha) {
    if (accepted.empty()) {
        IntervalSet out;
        out.method = "ExPCS";
        out.level = 1.0 - alpha;
        out.no_survivor = true;
        return out;
    }
    return envelope(accepted, estimates, groups, alpha / 2.0, 1.0 - alpha, "ExPCS");
}

IntervalSet exocs(const std::set<int>& accepted, const EstimatesByStudy& estimates,
                  const std::set<int>& groups, double alpha) {
    if (accepted.empty()) {
        IntervalSet out;
        out.method = "ExOCS";
        out.level = 1.0 - alpha;
        out.no_survivor = true;
        return out;
    }
    IntervalSet out = meta_over(accepted, estimates, groups, alpha, "ExOCS");
    return out;
}

IntervalSet meta_analysis(const EstimatesByStudy& estimates, const std::set<int>& groups,
                          double alpha) {
    return meta_over(all_ids(estimates), estimates, groups, alpha, "Meta");
}

IntervalSet simple_union(const EstimatesByStudy& estimates, const std::set<int>& groups,
                         double alpha) {
    const auto ids = all_ids(estimates);
    if (ids.empty()) throw EstimationError("simple_union: no estimators supplied");
    return envelope(ids, estimates, groups, alpha, 1.0 - alpha, "Simple");
}

void write_intervals_csv(const std::string& path, const std::vector<IntervalSet>& sets) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "method,group,lower,upper,level\n";
    for (const auto& s : sets)
        for (const auto& ci : s.intervals)
            out << s.method << ',' << ci.group << ',' << format_double(ci.lower) << ','
                << format_double(ci.upper) << ',' << format_double(ci.level) << '\n';
}

} // namespace gatex
