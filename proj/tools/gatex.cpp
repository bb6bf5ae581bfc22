// gatex: falsification of observational effect estimators against RCT
// validation effects, and conservative intervals for extrapolated groups.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "gatex/bench.hpp"
#include "gatex/csv.hpp"
#include "gatex/serialize.hpp"

namespace fs = std::filesystem;
using namespace gatex;

namespace {

struct CommonArgs {
    std::uint64_t seed = 20240905;
    double alpha = 0.05;
    std::string out = "out";
    int threads = 0;
    bool fast = false;
};

struct DgpArgs {
    DgpConfig cfg;
    double bw_threshold = -1.0; // <0: unset

    DgpConfig resolved() const {
        DgpConfig c = cfg;
        if (bw_threshold >= 0.0) c.bw_threshold = bw_threshold;
        return c;
    }
};

void add_dgp_options(CLI::App* cmd, DgpArgs& dgp) {
    cmd->add_option("--k-studies", dgp.cfg.k_studies, "number of observational studies");
    cmd->add_option("--upsample", dgp.cfg.upsample, "observational size ratio r");
    cmd->add_option("--m-cont", dgp.cfg.m_cont, "continuous confounders");
    cmd->add_option("--m-bin", dgp.cfg.m_bin, "binary confounders");
    cmd->add_option("--conceal", dgp.cfg.conceal_counts,
                    "concealed confounders per study (k values)")
        ->delimiter(',');
    cmd->add_option("--omega", dgp.cfg.omega, "treatment offset in the response surface");
    cmd->add_option("--synthetic-rows", dgp.cfg.synthetic_rows,
                    "rows of the bundled synthetic covariate table");
    cmd->add_option("--covariate-csv", dgp.cfg.covariate_csv,
                    "real covariate table (e.g. the IHDP file); empty uses the synthetic table");
    cmd->add_option("--col-bw", dgp.cfg.col_bw, "birth-weight column");
    cmd->add_option("--col-married", dgp.cfg.col_married, "marital-status column");
    cmd->add_option("--col-male", dgp.cfg.col_male, "male-infant column");
    cmd->add_option("--col-smoked", dgp.cfg.col_smoked, "mother-smoked column");
    cmd->add_option("--col-worked", dgp.cfg.col_worked, "mother-worked column");
    cmd->add_option("--bw-threshold", dgp.bw_threshold,
                    "threshold for a continuous birth-weight column (grams)");
}

Schema make_schema(const std::string& a, const std::string& y, const std::string& g,
                   const std::string& d, int group_count) {
    Schema s;
    s.treatment = a;
    s.outcome = y;
    s.group = g;
    s.source = d;
    s.group_count = group_count;
    return s;
}

int error_exit(const std::string& type, const std::string& message, int code) {
    json j{{"error", {{"type", type}, {"message", message}}}};
    std::cerr << j.dump() << std::endl;
    return code;
}

std::vector<int> parse_cz(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ','))
        out.push_back(std::stoi(field));
    return out;
}

// ---------------------------------------------------------------------------

int run_simulate(const CommonArgs& common, const DgpArgs& dgp_args, int rep,
                 std::size_t n_oracle) {
    DgpConfig dgp = dgp_args.resolved();
    dgp.alpha = common.alpha;
    dgp.validate();
    fs::create_directories(common.out);

    Rng base_rng = derive_rng(common.seed, {stream::base_table});
    const BaseTable base = load_base(dgp, base_rng);
    const auto urep = static_cast<std::uint64_t>(rep);

    Rng params_rng = derive_rng(common.seed, {stream::outcome_params, 0, urep});
    const OutcomeParams params = draw_outcome_params(
        base.x.cols, static_cast<std::size_t>(dgp.m_cont + dgp.m_bin), dgp.omega, params_rng);

    SimDiagnostics diag;
    Rng rct_rng = derive_rng(common.seed, {stream::rct, 0, urep});
    const Dataset rct = make_rct(base, params, dgp, rct_rng, &diag);
    save_dataset(common.out + "/rct.csv", rct);

    std::vector<Dataset> obs;
    for (int k = 1; k <= dgp.k_studies; ++k) {
        Rng obs_rng =
            derive_rng(common.seed, {stream::observational, 0, urep, static_cast<std::uint64_t>(k)});
        obs.push_back(make_observational(base, params, dgp, k, obs_rng, &diag));
        save_dataset(common.out + "/obs_" + std::to_string(k) + ".csv", obs.back());
    }

    std::vector<const Dataset*> obs_ptr;
    for (const auto& ds : obs) obs_ptr.push_back(&ds);
    const GroupSupport support = split_support(rct, obs_ptr, dgp.group_count());

    Rng truth_rng = derive_rng(common.seed, {stream::truth, 0, urep});
    const TruthTable truth = true_gate(base, params, dgp, support, n_oracle, truth_rng);

    json meta{{"seed", common.seed},
              {"rep", rep},
              {"covariate_source", base.source_label},
              {"exp_clamped", diag.exp_clamped},
              {"validation_groups",
               std::vector<int>(support.validation.begin(), support.validation.end())},
              {"extrapolated_groups",
               std::vector<int>(support.extrapolated.begin(), support.extrapolated.end())}};
    write_json_file(common.out + "/truth.json", to_json(truth));
    write_json_file(common.out + "/params.json", to_json(params));
    write_json_file(common.out + "/simulate_meta.json", meta);
    std::cout << "wrote rct.csv, " << dgp.k_studies << " observational studies, truth.json to "
              << common.out << "\n";
    return 0;
}

int run_estimate(const CommonArgs& common, const std::string& rct_path,
                 const std::vector<std::string>& obs_paths, const Schema& schema,
                 std::size_t k_folds, int rep) {
    if (obs_paths.empty()) throw ConfigError("estimate: at least one --obs dataset required");
    fs::create_directories(common.out);

    const Dataset rct = load_dataset(rct_path, schema);
    std::vector<Dataset> obs;
    std::vector<const Dataset*> obs_ptr;
    for (const auto& p : obs_paths) obs.push_back(load_dataset(p, schema));
    for (const auto& ds : obs) obs_ptr.push_back(&ds);

    const int group_count = schema.group_count;
    const GroupSupport support = split_support(rct, obs_ptr, group_count);

    NuisanceOptions opts =
        common.fast ? NuisanceOptions::fast() : NuisanceOptions::paper_defaults();

    EstimatesFile file;
    file.group_count = group_count;
    file.validation_groups = support.validation;
    file.rct = rct_gate(rct, group_count, 0);
    const auto urep = static_cast<std::uint64_t>(rep);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const int k = static_cast<int>(i) + 1;
        const auto transported = transported_gate(
            rct, obs[i], support.validation, group_count, k_folds, opts,
            derive_seed(common.seed,
                        {stream::transported_fit, 0, urep, static_cast<std::uint64_t>(k)}),
            k);
        const auto dr = dr_score_gate(
            obs[i], group_count, k_folds, opts,
            derive_seed(common.seed, {stream::dr_fit, 0, urep, static_cast<std::uint64_t>(k)}),
            k);
        std::vector<GateEstimate> merged;
        for (const auto& e : transported)
            if (support.validation.count(e.group)) merged.push_back(e);
        for (const auto& e : dr)
            if (support.extrapolated.count(e.group)) merged.push_back(e);
        file.studies[k] = std::move(merged);
    }
    write_json_file(common.out + "/estimates.json", to_json(file));
    std::cout << "wrote estimates.json for " << obs.size() << " studies to " << common.out
              << "\n";
    return 0;
}

int run_falsify(const CommonArgs& common, const std::string& estimates_path,
                const std::string& rct_path) {
    fs::create_directories(common.out);
    EstimatesFile file = estimates_file_from_json(read_json_file(estimates_path));
    if (!rct_path.empty()) {
        const json j = read_json_file(rct_path);
        const json arr = j.is_array() ? j : j.at("rct");
        file.rct.clear();
        for (const auto& ej : arr) file.rct.push_back(gate_estimate_from_json(ej));
    }
    std::map<int, std::vector<GateEstimate>> validation;
    for (const auto& [k, ests] : file.studies) {
        std::vector<GateEstimate> v;
        for (const auto& e : ests)
            if (file.validation_groups.count(e.group)) v.push_back(e);
        validation[k] = std::move(v);
    }
    const FalsificationReport report =
        falsify(validation, file.rct, file.validation_groups, common.alpha);
    write_json_file(common.out + "/falsification.json", to_json(report));
    std::cout << "accepted " << report.accepted.size() << " of " << file.studies.size()
              << " estimators (threshold " << report.threshold << ")\n";
    return 0;
}

int run_combine(const CommonArgs& common, const std::string& estimates_path,
                const std::string& falsification_path,
                const std::vector<std::string>& methods) {
    fs::create_directories(common.out);
    const EstimatesFile file = estimates_file_from_json(read_json_file(estimates_path));
    const FalsificationReport report =
        falsification_report_from_json(read_json_file(falsification_path));

    std::set<int> groups;
    for (int gi = 0; gi < file.group_count; ++gi)
        if (!file.validation_groups.count(gi)) groups.insert(gi);

    std::vector<IntervalSet> sets;
    for (const auto& m : methods) {
        if (m == "ExPCS") sets.push_back(expcs(report.accepted, file.studies, groups, common.alpha));
        else if (m == "ExOCS") sets.push_back(exocs(report.accepted, file.studies, groups, common.alpha));
        else if (m == "Meta") sets.push_back(meta_analysis(file.studies, groups, common.alpha));
        else if (m == "Simple") sets.push_back(simple_union(file.studies, groups, common.alpha));
        else throw ConfigError("unknown method: " + m);
    }
    json out = json::array();
    for (const auto& s : sets) out.push_back(to_json(s));
    write_json_file(common.out + "/intervals.json", out);
    write_intervals_csv(common.out + "/intervals.csv", sets);
    std::cout << "wrote intervals.json and intervals.csv to " << common.out << "\n";
    return 0;
}

int run_bench(const CommonArgs& common, const DgpArgs& dgp_args, const std::string& sweep,
              int replications, const std::vector<double>& r_values,
              const std::vector<std::string>& cz_values, const std::vector<std::string>& methods,
              bool fix_params, std::size_t n_oracle, std::size_t k_folds) {
    ExperimentSpec spec;
    spec.dgp = dgp_args.resolved();
    spec.dgp.alpha = common.alpha;
    spec.replications = replications;
    spec.methods = methods;
    spec.fast = common.fast;
    spec.fix_params = fix_params;
    spec.n_oracle = n_oracle;
    spec.threads = common.threads;
    spec.master_seed = common.seed;
    spec.k_folds = k_folds;
    spec.r_values = r_values;
    if (!cz_values.empty()) {
        spec.conceal_values.clear();
        for (const auto& s : cz_values) spec.conceal_values.push_back(parse_cz(s));
    }
    if (sweep == "none") spec.sweep = SweepKind::none;
    else if (sweep == "r") spec.sweep = SweepKind::upsample;
    else if (sweep == "cz") spec.sweep = SweepKind::conceal;
    else throw ConfigError("bench: sweep must be one of none|r|cz");

    const BenchResult result = run_experiment(spec);
    write_bench_outputs(result, common.out);
    std::cout << "wrote coverage.csv, width.csv, selection.csv, report.json to " << common.out
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"falsify observational GATE estimators against RCT validation effects and "
                 "combine the survivors into conservative intervals"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML/INI config file; flags override file values");

    CommonArgs common;
    app.add_option("--seed", common.seed, "master seed; all randomness derives from it");
    app.add_option("--alpha", common.alpha, "significance level");
    app.add_option("--out", common.out, "output directory");
    app.add_option("--threads", common.threads, "worker cap, 0 = hardware");
    app.add_flag("--fast", common.fast, "ridge nuisances instead of the MLP grid");

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate one replication of semi-synthetic data");
    DgpArgs sim_dgp;
    int sim_rep = 0;
    std::size_t sim_oracle = 100000;
    add_dgp_options(sim, sim_dgp);
    sim->add_option("--rep", sim_rep, "replication index");
    sim->add_option("--n-oracle", sim_oracle, "Monte Carlo draws per group for the truth table");

    // estimate
    auto* est = app.add_subcommand("estimate", "GATE estimates for RCT + observational CSVs");
    std::string est_rct;
    std::vector<std::string> est_obs;
    std::string col_a = "a", col_y = "y", col_g = "g", col_d = "d";
    int est_groups = 4, est_rep = 0;
    std::size_t est_folds = 3;
    est->add_option("--rct", est_rct, "RCT dataset CSV")->required();
    est->add_option("--obs", est_obs, "observational dataset CSVs, in study order")->required();
    est->add_option("--treatment-col", col_a, "treatment column name");
    est->add_option("--outcome-col", col_y, "outcome column name");
    est->add_option("--group-col", col_g, "group column name");
    est->add_option("--source-col", col_d, "source id column name");
    est->add_option("--group-count", est_groups, "number of groups");
    est->add_option("--k-folds", est_folds, "cross-fitting folds");
    est->add_option("--rep", est_rep, "replication index (aligns seeds with bench)");

    // falsify
    auto* fal = app.add_subcommand("falsify", "test estimators against the RCT validation effects");
    std::string fal_estimates, fal_rct;
    fal->add_option("--estimates", fal_estimates, "estimates.json from `estimate`")->required();
    fal->add_option("--rct", fal_rct, "optional separate RCT estimates JSON");

    // combine
    auto* com = app.add_subcommand("combine", "intervals for the extrapolated groups");
    std::string com_estimates, com_falsification;
    std::vector<std::string> com_methods{"ExPCS", "ExOCS", "Meta", "Simple"};
    com->add_option("--estimates", com_estimates, "estimates.json")->required();
    com->add_option("--falsification", com_falsification, "falsification.json")->required();
    com->add_option("--methods", com_methods, "subset of ExPCS ExOCS Meta Simple");

    // bench
    auto* ben = app.add_subcommand("bench", "Monte Carlo experiment harness");
    DgpArgs ben_dgp;
    std::string ben_sweep = "none";
    int ben_reps = 100;
    std::vector<double> ben_r{1.0, 3.0, 5.0, 10.0};
    std::vector<std::string> ben_cz;
    std::vector<std::string> ben_methods{"ExPCS", "ExOCS", "Meta", "Simple"};
    bool ben_fix_params = false;
    std::size_t ben_oracle = 100000, ben_folds = 3;
    add_dgp_options(ben, ben_dgp);
    ben->add_option("--sweep", ben_sweep, "none | r | cz");
    ben->add_option("--replications", ben_reps, "Monte Carlo replications per sweep point");
    ben->add_option("--r-values", ben_r, "upsampling ratios for --sweep r")->delimiter(',');
    ben->add_option("--cz-values", ben_cz, "conceal vectors for --sweep cz, e.g. 0,0,0,3,3");
    ben->add_option("--methods", ben_methods, "methods to evaluate");
    ben->add_flag("--fix-params", ben_fix_params, "freeze outcome parameters across replications");
    ben->add_option("--n-oracle", ben_oracle, "Monte Carlo draws per group for the truth table");
    ben->add_option("--k-folds", ben_folds, "cross-fitting folds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return run_simulate(common, sim_dgp, sim_rep, sim_oracle);
        if (est->parsed())
            return run_estimate(common, est_rct, est_obs,
                                make_schema(col_a, col_y, col_g, col_d, est_groups), est_folds,
                                est_rep);
        if (fal->parsed()) return run_falsify(common, fal_estimates, fal_rct);
        if (com->parsed()) return run_combine(common, com_estimates, com_falsification, com_methods);
        if (ben->parsed())
            return run_bench(common, ben_dgp, ben_sweep, ben_reps, ben_r, ben_cz, ben_methods,
                             ben_fix_params, ben_oracle, ben_folds);
        return 2;
    } catch (const ConfigError& e) {
        return error_exit("config", e.what(), 2);
    } catch (const SchemaError& e) {
        return error_exit("schema", e.what(), 2);
    } catch (const ParseError& e) {
        return error_exit("parse", e.what(), 2);
    } catch (const Error& e) {
        return error_exit("runtime", e.what(), 3);
    } catch (const std::exception& e) {
        return error_exit("internal", e.what(), 3);
    }
}
