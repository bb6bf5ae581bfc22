#include "gatex/bench.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "gatex/csv.hpp"
#include "gatex/errors.hpp"

namespace gatex {

double CellAggregate::coverage_se() const {
    if (!reps) return 0.0;
    const double p = coverage();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
}

NuisanceOptions nuisance_options_for(const ExperimentSpec& spec) {
    return spec.fast ? NuisanceOptions::fast() : NuisanceOptions::paper_defaults();
}

std::set<int> biased_ids_of(const DgpConfig& dgp) {
    std::set<int> ids;
    for (int k = 1; k <= dgp.k_studies; ++k)
        if (dgp.conceal_counts[static_cast<std::size_t>(k - 1)] > 0) ids.insert(k);
    return ids;
}

double selection_rate(const std::vector<RepRecord>& reps, const std::set<int>& biased_ids) {
    int ok = 0, hit = 0;
    for (const auto& rec : reps) {
        if (rec.failed) continue;
        ++ok;
        for (int k : biased_ids)
            if (rec.accepted.count(k)) {
                ++hit;
                break;
            }
    }
    return ok ? static_cast<double>(hit) / ok : 0.0;
}

RepRecord run_replication(const BaseTable& base, const DgpConfig& dgp,
                          const ExperimentSpec& spec, std::size_t sweep_idx, int rep) {
    const std::uint64_t master = spec.master_seed;
    const auto urep = static_cast<std::uint64_t>(rep);
    SimDiagnostics diag;

    const int params_rep = spec.fix_params ? 0 : rep;
    Rng params_rng = derive_rng(master, {stream::outcome_params, sweep_idx,
                                         static_cast<std::uint64_t>(params_rep)});
    const OutcomeParams params = draw_outcome_params(
        base.x.cols, static_cast<std::size_t>(dgp.m_cont + dgp.m_bin), dgp.omega, params_rng);

    Rng rct_rng = derive_rng(master, {stream::rct, sweep_idx, urep});
    const Dataset rct = make_rct(base, params, dgp, rct_rng, &diag);

    std::vector<Dataset> obs;
    std::vector<const Dataset*> obs_ptr;
    for (int k = 1; k <= dgp.k_studies; ++k) {
        Rng obs_rng = derive_rng(master, {stream::observational, sweep_idx, urep,
                                          static_cast<std::uint64_t>(k)});
        obs.push_back(make_observational(base, params, dgp, k, obs_rng, &diag));
    }
    for (const auto& ds : obs) obs_ptr.push_back(&ds);

    const GroupSupport support = split_support(rct, obs_ptr, dgp.group_count());

    Rng truth_rng = derive_rng(master, {stream::truth, sweep_idx, urep});
    const TruthTable truth =
        true_gate(base, params, dgp, support, spec.n_oracle, truth_rng);

    const NuisanceOptions opts = nuisance_options_for(spec);

    RepRecord rec;
    rec.rep = rep;
    rec.exp_clamped = diag.exp_clamped;
    rec.estimates.group_count = dgp.group_count();
    rec.estimates.validation_groups = support.validation;
    rec.estimates.rct = rct_gate(rct, dgp.group_count(), 0);

    std::map<int, std::vector<GateEstimate>> validation_estimates;
    for (int k = 1; k <= dgp.k_studies; ++k) {
        const auto& study = obs[static_cast<std::size_t>(k - 1)];
        const auto transported = transported_gate(
            rct, study, support.validation, dgp.group_count(), spec.k_folds, opts,
            derive_seed(master, {stream::transported_fit, sweep_idx, urep,
                                 static_cast<std::uint64_t>(k)}),
            k);
        const auto dr = dr_score_gate(
            study, dgp.group_count(), spec.k_folds, opts,
            derive_seed(master, {stream::dr_fit, sweep_idx, urep,
                                 static_cast<std::uint64_t>(k)}),
            k);
        // assemble the GATE vector: transported on validation groups,
        // doubly-robust on extrapolated groups
        std::vector<GateEstimate> merged;
        for (const auto& e : transported)
            if (support.validation.count(e.group)) merged.push_back(e);
        for (const auto& e : dr)
            if (support.extrapolated.count(e.group)) merged.push_back(e);
        validation_estimates[k] = transported;
        rec.estimates.studies[k] = std::move(merged);
    }

    const FalsificationReport report =
        falsify(validation_estimates, rec.estimates.rct, support.validation, dgp.alpha);
    rec.threshold = report.threshold;
    rec.accepted = report.accepted;
    rec.tests = report.tests;

    for (const auto& mname : spec.methods) {
        IntervalSet set;
        if (mname == "ExPCS")
            set = expcs(report.accepted, rec.estimates.studies, support.extrapolated, dgp.alpha);
        else if (mname == "ExOCS")
            set = exocs(report.accepted, rec.estimates.studies, support.extrapolated, dgp.alpha);
        else if (mname == "Meta")
            set = meta_analysis(rec.estimates.studies, support.extrapolated, dgp.alpha);
        else if (mname == "Simple")
            set = simple_union(rec.estimates.studies, support.extrapolated, dgp.alpha);
        else
            throw ConfigError("unknown method: " + mname);
        rec.intervals.emplace(mname, std::move(set));
    }

    for (const auto& e : truth.entries) {
        rec.truth[e.group] = e.tau;
        rec.truth_se[e.group] = e.mc_se;
    }
    return rec;
}

namespace {

void parallel_reps(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            int i;
            while ((i = next.fetch_add(1)) < n) fn(i);
        });
    for (auto& th : pool) th.join();
}

std::string sweep_label(const ExperimentSpec& spec, std::size_t idx) {
    if (spec.sweep == SweepKind::upsample) {
        std::ostringstream os;
        os << "r=" << spec.r_values[idx];
        return os.str();
    }
    if (spec.sweep == SweepKind::conceal) {
        std::ostringstream os;
        os << "cz=(";
        const auto& cz = spec.conceal_values[idx];
        for (std::size_t i = 0; i < cz.size(); ++i) os << (i ? "," : "") << cz[i];
        os << ")";
        return os.str();
    }
    return "default";
}

} // namespace

BenchResult run_experiment(const ExperimentSpec& spec) {
    spec.dgp.validate();
    Rng base_rng = derive_rng(spec.master_seed, {stream::base_table});
    const BaseTable base = load_base(spec.dgp, base_rng);

    std::size_t n_sweeps = 1;
    if (spec.sweep == SweepKind::upsample) n_sweeps = spec.r_values.size();
    if (spec.sweep == SweepKind::conceal) n_sweeps = spec.conceal_values.size();

    BenchResult result;
    result.spec = spec;
    result.covariate_source = base.source_label;

    for (std::size_t si = 0; si < n_sweeps; ++si) {
        DgpConfig dgp = spec.dgp;
        if (spec.sweep == SweepKind::upsample) dgp.upsample = spec.r_values[si];
        if (spec.sweep == SweepKind::conceal) dgp.conceal_counts = spec.conceal_values[si];
        dgp.validate();

        SweepResult sw;
        sw.label = sweep_label(spec, si);
        sw.r = dgp.upsample;
        sw.conceal = dgp.conceal_counts;
        sw.reps.resize(static_cast<std::size_t>(spec.replications));

        parallel_reps(spec.replications, spec.threads, [&](int rep) {
            try {
                sw.reps[static_cast<std::size_t>(rep)] =
                    run_replication(base, dgp, spec, si, rep);
            } catch (const std::exception& e) {
                RepRecord rec;
                rec.rep = rep;
                rec.failed = true;
                rec.error = e.what();
                sw.reps[static_cast<std::size_t>(rep)] = std::move(rec);
            }
        });

        for (const auto& rec : sw.reps) {
            if (rec.failed) {
                ++sw.reps_failed;
                continue;
            }
            ++sw.reps_ok;
            std::set<int> io;
            for (int gi = 0; gi < rec.estimates.group_count; ++gi)
                if (!rec.estimates.validation_groups.count(gi)) io.insert(gi);
            sw.extrapolated_groups.insert(io.begin(), io.end());
            for (const auto& [method, set] : rec.intervals) {
                if (set.no_survivor) {
                    // an empty accepted set yields no interval: counts against
                    // coverage, contributes no width
                    ++sw.no_survivor;
                    for (int gi : io) ++sw.cells[method][gi].reps;
                    continue;
                }
                for (const auto& ci : set.intervals) {
                    auto& cell = sw.cells[method][ci.group];
                    ++cell.reps;
                    const double tau = rec.truth.at(ci.group);
                    if (ci.lower <= tau && tau <= ci.upper) ++cell.covered;
                    cell.width_sum += ci.upper - ci.lower;
                    ++cell.width_reps;
                }
            }
        }
        const std::set<int> biased = biased_ids_of(dgp);
        sw.selection_rate = selection_rate(sw.reps, biased);
        sw.selection_se = sw.reps_ok ? std::sqrt(sw.selection_rate * (1.0 - sw.selection_rate) /
                                                 sw.reps_ok)
                                     : 0.0;

        if (sw.reps_failed * 20 > spec.replications) {
            std::ostringstream os;
            os << "bench: " << sw.reps_failed << "/" << spec.replications
               << " replications failed at sweep point '" << sw.label << "'";
            for (const auto& rec : sw.reps)
                if (rec.failed) {
                    os << "; first error: " << rec.error;
                    break;
                }
            throw EstimationError(os.str());
        }
        result.sweeps.push_back(std::move(sw));
    }
    return result;
}

json spec_to_json(const ExperimentSpec& spec) {
    const DgpConfig& d = spec.dgp;
    json dgp{{"k_studies", d.k_studies},
             {"upsample", d.upsample},
             {"m_cont", d.m_cont},
             {"m_bin", d.m_bin},
             {"conceal", d.conceal_counts},
             {"alpha", d.alpha},
             {"omega", d.omega},
             {"synthetic_rows", d.synthetic_rows},
             {"covariate_csv", d.covariate_csv}};
    std::string sweep = "none";
    if (spec.sweep == SweepKind::upsample) sweep = "r";
    if (spec.sweep == SweepKind::conceal) sweep = "cz";
    return json{{"dgp", std::move(dgp)},
                {"sweep", sweep},
                {"r_values", spec.r_values},
                {"conceal_values", spec.conceal_values},
                {"replications", spec.replications},
                {"methods", spec.methods},
                {"fast", spec.fast},
                {"fix_params", spec.fix_params},
                {"n_oracle", spec.n_oracle},
                {"master_seed", spec.master_seed},
                {"k_folds", spec.k_folds}};
}

void write_bench_outputs(const BenchResult& result, const std::string& outdir) {
    std::filesystem::create_directories(outdir);
    const auto path = [&](const char* name) { return outdir + "/" + name; };

    std::ofstream cov(path("coverage.csv"));
    cov << "sweep,method,group,coverage,se,reps\n";
    std::ofstream wid(path("width.csv"));
    wid << "sweep,method,group,mean_width,reps\n";
    std::ofstream sel(path("selection.csv"));
    sel << "sweep,selection_rate,se,reps\n";

    for (const auto& sw : result.sweeps) {
        for (const auto& [method, groups] : sw.cells)
            for (const auto& [gi, cell] : groups) {
                cov << sw.label << ',' << method << ',' << gi << ','
                    << format_double(cell.coverage()) << ',' << format_double(cell.coverage_se())
                    << ',' << cell.reps << '\n';
                wid << sw.label << ',' << method << ',' << gi << ','
                    << format_double(cell.mean_width()) << ',' << cell.width_reps << '\n';
            }
        sel << sw.label << ',' << format_double(sw.selection_rate) << ','
            << format_double(sw.selection_se) << ',' << sw.reps_ok << '\n';
    }

    json sweeps = json::array();
    for (const auto& sw : result.sweeps) {
        json cells = json::array();
        for (const auto& [method, groups] : sw.cells)
            for (const auto& [gi, cell] : groups)
                cells.push_back(json{{"method", method},
                                     {"group", gi},
                                     {"coverage", cell.coverage()},
                                     {"coverage_se", cell.coverage_se()},
                                     {"mean_width", cell.mean_width()},
                                     {"reps", cell.reps}});
        json reps = json::array();
        for (const auto& rec : sw.reps) {
            json r{{"rep", rec.rep}, {"failed", rec.failed}};
            if (rec.failed) {
                r["error"] = rec.error;
            } else {
                r["accepted"] = std::vector<int>(rec.accepted.begin(), rec.accepted.end());
                r["threshold"] = rec.threshold;
                json intervals = json::object();
                for (const auto& [method, set] : rec.intervals)
                    intervals[method] = to_json(set);
                r["intervals"] = std::move(intervals);
                json truth = json::object();
                for (const auto& [gi, tau] : rec.truth)
                    truth[std::to_string(gi)] =
                        json{{"tau", tau}, {"mc_se", rec.truth_se.at(gi)}};
                r["truth"] = std::move(truth);
                r["estimates"] = to_json(rec.estimates);
                json tests = json::object();
                for (const auto& [k, stats_k] : rec.tests) {
                    json arr = json::array();
                    for (const auto& t : stats_k) arr.push_back(to_json(t));
                    tests[std::to_string(k)] = std::move(arr);
                }
                r["tests"] = std::move(tests);
                r["exp_clamped"] = rec.exp_clamped;
            }
            reps.push_back(std::move(r));
        }
        sweeps.push_back(json{{"label", sw.label},
                              {"r", sw.r},
                              {"conceal", sw.conceal},
                              {"selection_rate", sw.selection_rate},
                              {"selection_se", sw.selection_se},
                              {"reps_ok", sw.reps_ok},
                              {"reps_failed", sw.reps_failed},
                              {"no_survivor", sw.no_survivor},
                              {"cells", std::move(cells)},
                              {"replications", std::move(reps)}});
    }
    json report{{"config", spec_to_json(result.spec)},
                {"master_seed", result.spec.master_seed},
                {"covariate_source", result.covariate_source},
                {"sweeps", std::move(sweeps)}};
    write_json_file(path("report.json"), report);
}

} // namespace gatex
