#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gatex/dataset.hpp"
#include "gatex/rng.hpp"

namespace gatex {

struct DgpConfig {
    int k_studies = 5;
    double upsample = 10.0; // observational size = upsample * base rows
    int m_cont = 4;
    int m_bin = 3;
    std::vector<int> conceal_counts{0, 0, 2, 4, 6}; // per study
    double alpha = 0.05;
    double omega = 23.0; // treatment offset in the response surface
    int synthetic_rows = 985;
    std::string covariate_csv; // real covariate file; empty -> bundled synthetic table

    // role columns: birth weight and marital status define the four groups,
    // the other three drive the resampling weights
    std::string col_bw = "bw.high";
    std::string col_married = "b.marr";
    std::string col_male = "sex";
    std::string col_smoked = "cig";
    std::string col_worked = "work.dur";
    std::optional<double> bw_threshold; // required when col_bw is not binary

    int group_count() const { return 4; }
    void validate() const;
};

// Fixed covariate table the simulated datasets are built from. The RCT keeps
// the married rows verbatim; observational studies resample all rows with
// weight 0.8^(male + smoked + worked).
struct BaseTable {
    Matrix x;
    std::vector<std::string> names;
    std::string source_label; // "synthetic" or the file path
    int bw = -1, married = -1, male = -1, smoked = -1, worked = -1;
    std::optional<double> bw_threshold;
    std::vector<double> weights;
    std::vector<int> group;
    std::vector<std::uint32_t> married_rows;
};

BaseTable synthesize_base(int n0, Rng& rng);
BaseTable load_base(const DgpConfig& cfg, Rng& rng);

struct OutcomeParams {
    std::vector<double> beta;  // treatment slot first, then one per covariate
    std::vector<double> gamma; // one per confounder
    double omega = 23.0;
};

OutcomeParams draw_outcome_params(std::size_t covariate_count, std::size_t confounder_count,
                                  double omega, Rng& rng);

struct SimDiagnostics {
    long exp_clamped = 0;
};

// response surface means; the exponent of the control surface is clamped at 50
double y1_mean(const double* x, std::size_t mx, const double* z, std::size_t mz,
               const OutcomeParams& params);
double y0_mean(const double* x, std::size_t mx, const double* z, std::size_t mz,
               const OutcomeParams& params, SimDiagnostics* diag = nullptr);

struct Outcomes {
    std::vector<double> y, y0, y1;
};

// Potential outcomes and the realized outcome. The treatment slot of the
// design takes the value of the arm being generated, so y1 - y0 is the
// row-level effect; the realized outcome composes them with the treatment.
Outcomes simulate_outcomes(const Matrix& x, const Matrix& z, const std::vector<std::uint8_t>& a,
                           const OutcomeParams& params, Rng& rng,
                           SimDiagnostics* diag = nullptr);

std::vector<std::uint32_t> resample_rows(const BaseTable& base, std::size_t count, Rng& rng);

// confounder draws; observational mode conditions the mixtures on treatment
Matrix synthesize_confounders(std::size_t n, const std::vector<std::uint8_t>& a, int m_cont,
                              int m_bin, bool is_rct, Rng& rng);

Dataset make_rct(const BaseTable& base, const OutcomeParams& params, const DgpConfig& cfg,
                 Rng& rng, SimDiagnostics* diag = nullptr);
Dataset make_observational(const BaseTable& base, const OutcomeParams& params,
                           const DgpConfig& cfg, int study, Rng& rng,
                           SimDiagnostics* diag = nullptr);

// drops the c_z highest-gamma confounder columns (ties broken by index)
Dataset conceal(const Dataset& ds, const std::vector<double>& gamma, int c_z);

struct TruthEntry {
    int group = 0;
    double tau = 0.0;
    double mc_se = 0.0;
    int target_d = 0; // 0: RCT population, 1: observational population
};

struct TruthTable {
    std::vector<TruthEntry> entries;
    const TruthEntry& for_group(int g) const;
};

// Monte Carlo oracle for the per-group effects under the target populations
TruthTable true_gate(const BaseTable& base, const OutcomeParams& params, const DgpConfig& cfg,
                     const GroupSupport& support, std::size_t n_oracle, Rng& rng);

} // namespace gatex
