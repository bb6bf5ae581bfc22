#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gatex/combine.hpp"
#include "gatex/estimators.hpp"
#include "gatex/falsify.hpp"
#include "gatex/simgen.hpp"

namespace gatex {

using json = nlohmann::json;

json to_json(const GateEstimate& e);
GateEstimate gate_estimate_from_json(const json& j);

json to_json(const TestStatistic& t);
json to_json(const FalsificationReport& r);
FalsificationReport falsification_report_from_json(const json& j);

json to_json(const ConfidenceInterval& ci);
json to_json(const IntervalSet& s);

json to_json(const TruthTable& t);
TruthTable truth_table_from_json(const json& j);

json to_json(const OutcomeParams& p);
OutcomeParams outcome_params_from_json(const json& j);

// Bundle written by `estimate` and consumed by `falsify` / `combine`. Each
// study vector holds transported estimates on the validation groups and
// doubly-robust ones on the extrapolated groups.
struct EstimatesFile {
    int group_count = 0;
    std::set<int> validation_groups;
    std::vector<GateEstimate> rct;
    std::map<int, std::vector<GateEstimate>> studies;
};

json to_json(const EstimatesFile& f);
EstimatesFile estimates_file_from_json(const json& j);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

} // namespace gatex
