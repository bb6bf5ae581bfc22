#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gatex/combine.hpp"
#include "gatex/falsify.hpp"
#include "gatex/serialize.hpp"
#include "gatex/simgen.hpp"

namespace gatex {

enum class SweepKind { none, upsample, conceal };

struct ExperimentSpec {
    DgpConfig dgp;
    SweepKind sweep = SweepKind::none;
    std::vector<double> r_values{1.0, 3.0, 5.0, 10.0};
    std::vector<std::vector<int>> conceal_values{
        {0, 0, 0, 0, 0}, {0, 0, 0, 0, 3}, {0, 0, 0, 3, 3}, {0, 3, 3, 3, 3}};
    int replications = 100;
    std::vector<std::string> methods{"ExPCS", "ExOCS", "Meta", "Simple"};
    bool fast = false;       // ridge nuisances instead of the MLP
    bool fix_params = false; // freeze outcome parameters across replications
    std::size_t n_oracle = 100000;
    int threads = 0; // 0: hardware concurrency
    std::uint64_t master_seed = 20240905;
    std::size_t k_folds = 3;
};

NuisanceOptions nuisance_options_for(const ExperimentSpec& spec);

// everything remembered about one replication; enough to replay the
// falsify/combine stages from files
struct RepRecord {
    int rep = 0;
    bool failed = false;
    std::string error;
    double threshold = 0.0;
    std::set<int> accepted;
    std::map<std::string, IntervalSet> intervals;
    std::map<int, double> truth;
    std::map<int, double> truth_se;
    EstimatesFile estimates;
    std::map<int, std::vector<TestStatistic>> tests;
    long exp_clamped = 0;
};

struct CellAggregate {
    int reps = 0;
    int covered = 0;
    double width_sum = 0.0;
    int width_reps = 0;

    double coverage() const { return reps ? static_cast<double>(covered) / reps : 0.0; }
    double coverage_se() const;
    double mean_width() const { return width_reps ? width_sum / width_reps : 0.0; }
};

struct SweepResult {
    std::string label;
    double r = 0.0;
    std::vector<int> conceal;
    std::vector<RepRecord> reps;
    std::map<std::string, std::map<int, CellAggregate>> cells; // method -> group
    std::set<int> extrapolated_groups;
    double selection_rate = 0.0;
    double selection_se = 0.0;
    int reps_ok = 0;
    int reps_failed = 0;
    int no_survivor = 0;
};

struct BenchResult {
    ExperimentSpec spec;
    std::string covariate_source;
    std::vector<SweepResult> sweeps;
};

// one full replication of generate -> estimate -> falsify -> combine
RepRecord run_replication(const BaseTable& base, const DgpConfig& dgp,
                          const ExperimentSpec& spec, std::size_t sweep_idx, int rep);

BenchResult run_experiment(const ExperimentSpec& spec);

// coverage.csv, width.csv, selection.csv and report.json under outdir
void write_bench_outputs(const BenchResult& result, const std::string& outdir);

// fraction of replications whose accepted set contains a biased study
double selection_rate(const std::vector<RepRecord>& reps, const std::set<int>& biased_ids);

std::set<int> biased_ids_of(const DgpConfig& dgp);

json spec_to_json(const ExperimentSpec& spec);

} // namespace gatex
