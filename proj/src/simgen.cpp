#include "gatex/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gatex/csv.hpp"
#include "gatex/errors.hpp"
#include "gatex/kernels.hpp"

namespace gatex {

void DgpConfig::validate() const {
    if (k_studies < 1) throw ConfigError("dgp: k_studies must be >= 1");
    if (upsample < 1.0) throw ConfigError("dgp: upsample ratio must be >= 1");
    if (m_cont < 0 || m_bin < 0 || m_cont + m_bin < 1)
        throw ConfigError("dgp: needs at least one confounder");
    if (static_cast<int>(conceal_counts.size()) != k_studies)
        throw ConfigError("dgp: conceal vector length must equal k_studies");
    for (int c : conceal_counts)
        if (c < 0 || c > m_cont + m_bin)
            throw ConfigError("dgp: conceal count exceeds the confounder count");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("dgp: alpha must lie in (0,1)");
}

BaseTable synthesize_base(int n0, Rng& rng) {
    // 28 columns mirroring the shape of the public IHDP covariates:
    // 6 standard normals, then 22 binaries. Frequencies for the role columns
    // follow published summaries; the rest sit at 0.5.
    BaseTable base;
    base.source_label = "synthetic";
    for (int j = 1; j <= 6; ++j) base.names.push_back("xc" + std::to_string(j));
    base.names.insert(base.names.end(), {"bw.high", "b.marr", "sex", "cig", "work.dur"});
    std::vector<double> freqs{0.40, 0.43, 0.51, 0.35, 0.60};
    for (int j = 6; j <= 22; ++j) {
        base.names.push_back(j < 10 ? "xb0" + std::to_string(j) : "xb" + std::to_string(j));
        freqs.push_back(0.5);
    }
    base.x = Matrix(static_cast<std::size_t>(n0), base.names.size());
    for (std::size_t i = 0; i < base.x.rows; ++i) {
        double* row = base.x.row(i);
        for (std::size_t j = 0; j < 6; ++j) row[j] = rng.normal();
        for (std::size_t j = 6; j < base.names.size(); ++j)
            row[j] = rng.bernoulli(freqs[j - 6]) ? 1.0 : 0.0;
    }
    return base;
}

namespace {

int role_col(const BaseTable& base, const std::string& name, const char* what) {
    const auto it = std::find(base.names.begin(), base.names.end(), name);
    if (it == base.names.end())
        throw ConfigError(std::string("dgp: ") + what + " column '" + name + "' not found");
    return static_cast<int>(it - base.names.begin());
}

void finish_base(BaseTable& base, const DgpConfig& cfg) {
    base.bw = role_col(base, cfg.col_bw, "birth weight");
    base.married = role_col(base, cfg.col_married, "marital status");
    base.male = role_col(base, cfg.col_male, "male indicator");
    base.smoked = role_col(base, cfg.col_smoked, "smoked indicator");
    base.worked = role_col(base, cfg.col_worked, "worked indicator");
    base.bw_threshold = cfg.bw_threshold;

    for (int c : {base.married, base.male, base.smoked, base.worked})
        if (!column_is_binary(base.x, static_cast<std::size_t>(c)))
            throw ConfigError("dgp: role column '" + base.names[c] + "' must be binary");
    if (!base.bw_threshold && !column_is_binary(base.x, static_cast<std::size_t>(base.bw)))
        throw ConfigError("dgp: birth-weight column is continuous, a threshold is required");

    const std::size_t n = base.x.rows;
    base.weights.resize(n);
    base.group.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = base.x.row(i);
        const double ind = row[base.male] + row[base.smoked] + row[base.worked];
        base.weights[i] = std::pow(0.8, ind);
        const int high = base.bw_threshold ? (row[base.bw] >= *base.bw_threshold ? 1 : 0)
                                           : (row[base.bw] != 0.0 ? 1 : 0);
        const int married = row[base.married] != 0.0 ? 1 : 0;
        base.group[i] = 2 * high + married;
        if (married) base.married_rows.push_back(static_cast<std::uint32_t>(i));
    }
    if (base.married_rows.empty()) throw ConfigError("dgp: no married rows for the RCT");
}

} // namespace

BaseTable load_base(const DgpConfig& cfg, Rng& rng) {
    cfg.validate();
    BaseTable base;
    if (cfg.covariate_csv.empty()) {
        base = synthesize_base(cfg.synthetic_rows, rng);
    } else {
        const CsvTable t = read_csv(cfg.covariate_csv);
        base.names = t.names;
        base.x = t.values;
        base.source_label = cfg.covariate_csv;
        for (std::size_t i = 0; i < base.x.rows; ++i)
            for (std::size_t j = 0; j < base.x.cols; ++j)
                if (std::isnan(base.x(i, j)))
                    throw SchemaError(cfg.covariate_csv + ": NaN in covariate row " +
                                      std::to_string(i + 1));
    }
    finish_base(base, cfg);
    return base;
}

OutcomeParams draw_outcome_params(std::size_t covariate_count, std::size_t confounder_count,
                                  double omega, Rng& rng) {
    static const double beta_support[5] = {0.0, 0.1, 0.2, 0.3, 0.4};
    static const double beta_cum[5] = {0.6, 0.7, 0.8, 0.9, 1.0};
    static const double gamma_support[5] = {0.1, 0.2, 0.5, 0.75, 1.0};

    OutcomeParams params;
    params.omega = omega;
    params.beta.resize(covariate_count + 1);
    for (auto& b : params.beta) {
        const double u = rng.uniform();
        std::size_t k = 0;
        while (k < 4 && u >= beta_cum[k]) ++k;
        b = beta_support[k];
    }
    params.gamma.resize(confounder_count);
    for (auto& g : params.gamma) g = gamma_support[rng.uniform_int(5)];
    return params;
}

double y1_mean(const double* x, std::size_t mx, const double* z, std::size_t mz,
               const OutcomeParams& params) {
    double v = params.beta[0] + params.omega;
    v += kern::dot(params.beta.data() + 1, x, mx);
    v += kern::dot(params.gamma.data(), z, mz);
    return v;
}

double y0_mean(const double* x, std::size_t mx, const double* z, std::size_t mz,
               const OutcomeParams& params, SimDiagnostics* diag) {
    double ex = 0.5 * params.beta[0];
    for (std::size_t j = 0; j < mx; ++j) ex += (x[j] + 0.5) * params.beta[j + 1];
    if (ex > 50.0) {
        ex = 50.0;
        if (diag) ++diag->exp_clamped;
    }
    return std::exp(ex) + kern::dot(params.gamma.data(), z, mz);
}

Outcomes simulate_outcomes(const Matrix& x, const Matrix& z, const std::vector<std::uint8_t>& a,
                           const OutcomeParams& params, Rng& rng, SimDiagnostics* diag) {
    const std::size_t n = x.rows;
    if (z.rows != n || a.size() != n) throw ConfigError("simulate_outcomes: shape mismatch");
    if (params.beta.size() != x.cols + 1 || params.gamma.size() != z.cols)
        throw ConfigError("simulate_outcomes: parameter dimensions do not match the design");
    Outcomes out;
    out.y.resize(n);
    out.y0.resize(n);
    out.y1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.y0[i] = y0_mean(x.row(i), x.cols, z.row(i), z.cols, params, diag) + rng.normal();
        out.y1[i] = y1_mean(x.row(i), x.cols, z.row(i), z.cols, params) + rng.normal();
        out.y[i] = a[i] ? out.y1[i] : out.y0[i];
    }
    return out;
}

std::vector<std::uint32_t> resample_rows(const BaseTable& base, std::size_t count, Rng& rng) {
    std::vector<double> cum(base.weights.size());
    std::partial_sum(base.weights.begin(), base.weights.end(), cum.begin());
    const double total = cum.back();
    std::vector<std::uint32_t> idx(count);
    for (auto& v : idx) {
        const double u = rng.uniform() * total;
        v = static_cast<std::uint32_t>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (v >= cum.size()) v = static_cast<std::uint32_t>(cum.size() - 1);
    }
    return idx;
}

Matrix synthesize_confounders(std::size_t n, const std::vector<std::uint8_t>& a, int m_cont,
                              int m_bin, bool is_rct, Rng& rng) {
    if (!is_rct && a.size() != n)
        throw ConfigError("synthesize_confounders: treatment required in observational mode");
    Matrix z(n, static_cast<std::size_t>(m_cont + m_bin));
    for (std::size_t i = 0; i < n; ++i) {
        const double q = is_rct ? 0.5 : 0.25 + 0.5 * static_cast<double>(a[i]);
        double* row = z.row(i);
        for (int j = 0; j < m_cont; ++j)
            row[j] = rng.bernoulli(q) ? rng.normal(3.0, 1.0) : rng.normal(0.0, 1.0);
        for (int j = 0; j < m_bin; ++j)
            row[m_cont + j] = rng.bernoulli(q) ? 1.0 : 0.0;
    }
    return z;
}

namespace {

Dataset assemble(const BaseTable& base, const std::vector<std::uint32_t>& rows,
                 const Matrix& z, const std::vector<std::uint8_t>& a, const Outcomes& out,
                 int source_id) {
    Dataset ds;
    ds.names = base.names;
    for (std::size_t j = 0; j < z.cols; ++j) ds.names.push_back("z" + std::to_string(j + 1));
    const std::size_t n = rows.size();
    ds.x = Matrix(n, base.x.cols + z.cols);
    ds.a = a;
    ds.y = out.y;
    ds.g.resize(n);
    ds.source_id = source_id;
    ds.base_row.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = base.x.row(rows[i]);
        double* dst = ds.x.row(i);
        for (std::size_t j = 0; j < base.x.cols; ++j) dst[j] = src[j];
        for (std::size_t j = 0; j < z.cols; ++j) dst[base.x.cols + j] = z(i, j);
        ds.g[i] = base.group[rows[i]];
        ds.base_row[i] = static_cast<std::int32_t>(rows[i]);
    }
    return ds;
}

Matrix rows_of(const BaseTable& base, const std::vector<std::uint32_t>& rows) {
    Matrix out(rows.size(), base.x.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = base.x.row(rows[i]);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < base.x.cols; ++j) dst[j] = src[j];
    }
    return out;
}

} // namespace

Dataset make_rct(const BaseTable& base, const OutcomeParams& params, const DgpConfig& cfg,
                 Rng& rng, SimDiagnostics* diag) {
    const auto& rows = base.married_rows;
    const std::size_t n = rows.size();
    std::vector<std::uint8_t> a(n);
    for (auto& v : a) v = rng.bernoulli(0.5) ? 1 : 0;
    const Matrix z = synthesize_confounders(n, a, cfg.m_cont, cfg.m_bin, true, rng);
    const Matrix x = rows_of(base, rows);
    const Outcomes out = simulate_outcomes(x, z, a, params, rng, diag);
    return assemble(base, rows, z, a, out, 0);
}

Dataset make_observational(const BaseTable& base, const OutcomeParams& params,
                           const DgpConfig& cfg, int study, Rng& rng, SimDiagnostics* diag) {
    if (study < 1 || study > cfg.k_studies)
        throw ConfigError("make_observational: study index out of range");
    const std::size_t count = static_cast<std::size_t>(
        std::llround(cfg.upsample * static_cast<double>(base.x.rows)));
    const auto rows = resample_rows(base, count, rng);
    std::vector<std::uint8_t> a(count);
    for (auto& v : a) v = rng.bernoulli(0.5) ? 1 : 0;
    const Matrix z = synthesize_confounders(count, a, cfg.m_cont, cfg.m_bin, false, rng);
    const Matrix x = rows_of(base, rows);
    const Outcomes out = simulate_outcomes(x, z, a, params, rng, diag);
    Dataset ds = assemble(base, rows, z, a, out, study);
    return conceal(ds, params.gamma, cfg.conceal_counts[static_cast<std::size_t>(study - 1)]);
}

Dataset conceal(const Dataset& ds, const std::vector<double>& gamma, int c_z) {
    if (c_z == 0) return ds;
    if (c_z < 0 || static_cast<std::size_t>(c_z) > gamma.size())
        throw ConfigError("conceal: count exceeds the confounder count");

    std::vector<std::size_t> order(gamma.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return gamma[i] > gamma[j]; });

    std::vector<char> drop_name(gamma.size(), 0);
    for (int i = 0; i < c_z; ++i) drop_name[order[static_cast<std::size_t>(i)]] = 1;

    std::vector<std::size_t> keep;
    Dataset out = ds;
    out.names.clear();
    for (std::size_t j = 0; j < ds.names.size(); ++j) {
        bool dropped = false;
        for (std::size_t zi = 0; zi < gamma.size(); ++zi)
            if (drop_name[zi] && ds.names[j] == "z" + std::to_string(zi + 1)) dropped = true;
        if (dropped) continue;
        keep.push_back(j);
        out.names.push_back(ds.names[j]);
    }
    out.x = Matrix(ds.n(), keep.size());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const double* src = ds.x.row(i);
        double* dst = out.x.row(i);
        for (std::size_t j = 0; j < keep.size(); ++j) dst[j] = src[keep[j]];
    }
    return out;
}

const TruthEntry& TruthTable::for_group(int g) const {
    for (const auto& e : entries)
        if (e.group == g) return e;
    throw OracleError("truth table has no entry for group " + std::to_string(g));
}

TruthTable true_gate(const BaseTable& base, const OutcomeParams& params, const DgpConfig& cfg,
                     const GroupSupport& support, std::size_t n_oracle, Rng& rng) {
    if (n_oracle < 2) throw OracleError("true_gate: oracle sample too small");
    TruthTable table;
    for (int gi = 0; gi < cfg.group_count(); ++gi) {
        const bool validation = support.validation.count(gi) > 0;
        // candidate base rows of the target population
        std::vector<std::uint32_t> rows;
        std::vector<double> w;
        for (std::size_t i = 0; i < base.x.rows; ++i) {
            if (base.group[i] != gi) continue;
            if (validation && base.x(i, static_cast<std::size_t>(base.married)) == 0.0) continue;
            rows.push_back(static_cast<std::uint32_t>(i));
            w.push_back(validation ? 1.0 : base.weights[i]);
        }
        if (rows.empty())
            throw OracleError("true_gate: no base rows in group " + std::to_string(gi));
        std::vector<double> cum(w.size());
        std::partial_sum(w.begin(), w.end(), cum.begin());
        const double total = cum.back();

        double sum = 0.0, sum_sq = 0.0;
        std::vector<std::uint8_t> a1(1);
        for (std::size_t it = 0; it < n_oracle; ++it) {
            const double u = rng.uniform() * total;
            std::size_t pick = static_cast<std::size_t>(
                std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
            if (pick >= rows.size()) pick = rows.size() - 1;
            const std::uint32_t row = rows[pick];
            a1[0] = rng.bernoulli(0.5) ? 1 : 0;
            const Matrix z = synthesize_confounders(1, a1, cfg.m_cont, cfg.m_bin, validation, rng);
            const double d = (y1_mean(base.x.row(row), base.x.cols, z.row(0), z.cols, params) +
                              rng.normal()) -
                             (y0_mean(base.x.row(row), base.x.cols, z.row(0), z.cols, params) +
                              rng.normal());
            sum += d;
            sum_sq += d * d;
        }
        const double n = static_cast<double>(n_oracle);
        TruthEntry e;
        e.group = gi;
        e.target_d = validation ? 0 : 1;
        e.tau = sum / n;
        e.mc_se = std::sqrt(std::max(0.0, (sum_sq / n - e.tau * e.tau) / (n - 1.0)));
        table.entries.push_back(e);
    }
    return table;
}

} // namespace gatex
