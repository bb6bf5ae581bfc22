#include "gatex/serialize.hpp"

#include <fstream>

#include "gatex/errors.hpp"

namespace gatex {

json to_json(const GateEstimate& e) {
    return json{{"estimator_id", e.estimator_id},
                {"group", e.group},
                {"point", e.point},
                {"asym_var", e.asym_var},
                {"n_used", e.n_used}};
}

GateEstimate gate_estimate_from_json(const json& j) {
    GateEstimate e;
    e.estimator_id = j.at("estimator_id").get<int>();
    e.group = j.at("group").get<int>();
    e.point = j.at("point").get<double>();
    e.asym_var = j.at("asym_var").get<double>();
    e.n_used = j.at("n_used").get<std::int64_t>();
    return e;
}

json to_json(const TestStatistic& t) {
    return json{{"estimator_id", t.estimator_id}, {"group", t.group},
                {"t_value", t.t_value},           {"se", t.se},
                {"mu_offset", t.mu_offset},       {"obs_point", t.obs_point},
                {"rct_point", t.rct_point}};
}

json to_json(const FalsificationReport& r) {
    json tests = json::object();
    for (const auto& [k, stats_k] : r.tests) {
        json arr = json::array();
        for (const auto& t : stats_k) arr.push_back(to_json(t));
        tests[std::to_string(k)] = std::move(arr);
    }
    return json{{"alpha", r.alpha},
                {"i_r_size", r.i_r_size},
                {"threshold", r.threshold},
                {"tests", std::move(tests)},
                {"accepted", std::vector<int>(r.accepted.begin(), r.accepted.end())}};
}

FalsificationReport falsification_report_from_json(const json& j) {
    FalsificationReport r;
    r.alpha = j.at("alpha").get<double>();
    r.i_r_size = j.at("i_r_size").get<int>();
    r.threshold = j.at("threshold").get<double>();
    for (const auto& [key, arr] : j.at("tests").items()) {
        std::vector<TestStatistic> stats_k;
        for (const auto& tj : arr) {
            TestStatistic t;
            t.estimator_id = tj.at("estimator_id").get<int>();
            t.group = tj.at("group").get<int>();
            t.t_value = tj.at("t_value").get<double>();
            t.se = tj.at("se").get<double>();
            t.mu_offset = tj.at("mu_offset").get<double>();
            t.obs_point = tj.at("obs_point").get<double>();
            t.rct_point = tj.at("rct_point").get<double>();
            stats_k.push_back(t);
        }
        r.tests.emplace(std::stoi(key), std::move(stats_k));
    }
    for (const auto& k : j.at("accepted")) r.accepted.insert(k.get<int>());
    return r;
}

json to_json(const ConfidenceInterval& ci) {
    return json{{"group", ci.group}, {"lower", ci.lower}, {"upper", ci.upper},
                {"level", ci.level}};
}

json to_json(const IntervalSet& s) {
    json arr = json::array();
    for (const auto& ci : s.intervals) arr.push_back(to_json(ci));
    return json{{"method", s.method},
                {"level", s.level},
                {"no_survivor", s.no_survivor},
                {"intervals", std::move(arr)}};
}

json to_json(const TruthTable& t) {
    json arr = json::array();
    for (const auto& e : t.entries)
        arr.push_back(json{{"group", e.group},
                           {"tau", e.tau},
                           {"mc_se", e.mc_se},
                           {"target_d", e.target_d}});
    return json{{"entries", std::move(arr)}};
}

TruthTable truth_table_from_json(const json& j) {
    TruthTable t;
    for (const auto& ej : j.at("entries")) {
        TruthEntry e;
        e.group = ej.at("group").get<int>();
        e.tau = ej.at("tau").get<double>();
        e.mc_se = ej.at("mc_se").get<double>();
        e.target_d = ej.at("target_d").get<int>();
        t.entries.push_back(e);
    }
    return t;
}

json to_json(const OutcomeParams& p) {
    return json{{"beta", p.beta}, {"gamma", p.gamma}, {"omega", p.omega}};
}

OutcomeParams outcome_params_from_json(const json& j) {
    OutcomeParams p;
    p.beta = j.at("beta").get<std::vector<double>>();
    p.gamma = j.at("gamma").get<std::vector<double>>();
    p.omega = j.at("omega").get<double>();
    return p;
}

json to_json(const EstimatesFile& f) {
    json studies = json::object();
    json low = json::array();
    auto collect = [&](const std::vector<GateEstimate>& v) {
        json arr = json::array();
        for (const auto& e : v) {
            arr.push_back(to_json(e));
            if (e.low_n)
                low.push_back(json{{"estimator_id", e.estimator_id}, {"group", e.group}});
        }
        return arr;
    };
    for (const auto& [k, v] : f.studies) studies[std::to_string(k)] = collect(v);
    return json{{"group_count", f.group_count},
                {"validation_groups",
                 std::vector<int>(f.validation_groups.begin(), f.validation_groups.end())},
                {"rct", collect(f.rct)},
                {"studies", std::move(studies)},
                {"low_sample", std::move(low)}};
}

EstimatesFile estimates_file_from_json(const json& j) {
    EstimatesFile f;
    f.group_count = j.at("group_count").get<int>();
    for (const auto& g : j.at("validation_groups")) f.validation_groups.insert(g.get<int>());
    for (const auto& ej : j.at("rct")) f.rct.push_back(gate_estimate_from_json(ej));
    for (const auto& [key, arr] : j.at("studies").items()) {
        std::vector<GateEstimate> v;
        for (const auto& ej : arr) v.push_back(gate_estimate_from_json(ej));
        f.studies.emplace(std::stoi(key), std::move(v));
    }
    return f;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

} // namespace gatex
