#include "gatex/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gatex/csv.hpp"
#include "gatex/errors.hpp"

namespace gatex {

int Dataset::col(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

bool column_is_binary(const Matrix& x, std::size_t j) {
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double v = x(i, j);
        if (v != 0.0 && v != 1.0) return false;
    }
    return true;
}

namespace {

int require_col(const CsvTable& t, const std::string& name, const std::string& path) {
    const auto it = std::find(t.names.begin(), t.names.end(), name);
    if (it == t.names.end())
        throw SchemaError(path + ": schema column '" + name + "' not present");
    return static_cast<int>(it - t.names.begin());
}

int as_int(double v, std::size_t row, const std::string& what) {
    if (std::isnan(v) || v != std::floor(v) || v < 0.0) {
        std::ostringstream os;
        os << what << " must be a nonnegative integer, got " << v << " in data row " << row;
        throw SchemaError(os.str());
    }
    return static_cast<int>(v);
}

} // namespace

Dataset load_dataset(const std::string& path, const Schema& schema) {
    const CsvTable t = read_csv(path);
    const int ca = require_col(t, schema.treatment, path);
    const int cy = require_col(t, schema.outcome, path);
    const int cg = schema.group.empty() ? -1 : require_col(t, schema.group, path);
    const int cd = schema.source.empty() ? -1 : require_col(t, schema.source, path);

    std::vector<int> covariate_cols;
    Dataset ds;
    for (std::size_t j = 0; j < t.names.size(); ++j) {
        const int ji = static_cast<int>(j);
        if (ji == ca || ji == cy || ji == cg || ji == cd) continue;
        covariate_cols.push_back(ji);
        ds.names.push_back(t.names[j]);
    }

    const std::size_t n = t.values.rows;
    const std::size_t d = covariate_cols.size();
    ds.x = Matrix(n, d);
    ds.a.resize(n);
    ds.y.resize(n);
    ds.g.assign(n, -1);

    for (std::size_t i = 0; i < n; ++i) {
        const double* row = t.values.row(i);
        const double av = row[ca];
        if (av != 0.0 && av != 1.0) {
            std::ostringstream os;
            os << path << ": treatment must be 0 or 1, got " << av << " in data row " << (i + 1);
            throw SchemaError(os.str());
        }
        ds.a[i] = static_cast<std::uint8_t>(av);
        ds.y[i] = row[cy];
        if (cg >= 0) ds.g[i] = as_int(row[cg], i + 1, path + ": group id");
        for (std::size_t j = 0; j < d; ++j) ds.x(i, j) = row[covariate_cols[j]];
        // fail fast on missing values in any used column
        bool has_nan = std::isnan(ds.y[i]);
        for (std::size_t j = 0; j < d && !has_nan; ++j) has_nan = std::isnan(ds.x(i, j));
        if (has_nan) {
            std::ostringstream os;
            os << path << ": NaN in data row " << (i + 1) << "; missing values are not accepted";
            throw SchemaError(os.str());
        }
    }
    if (cd >= 0 && n > 0) {
        ds.source_id = as_int(t.values(0, cd), 1, path + ": source id");
        for (std::size_t i = 1; i < n; ++i)
            if (as_int(t.values(i, cd), i + 1, path + ": source id") != ds.source_id)
                throw SchemaError(path + ": source id column is not constant");
    }
    if (n == 0) throw SchemaError(path + ": dataset has no rows");
    if (schema.group_count > 0 && cg >= 0) {
        for (std::size_t i = 0; i < n; ++i)
            if (ds.g[i] >= schema.group_count) {
                std::ostringstream os;
                os << path << ": group id " << ds.g[i] << " out of range in data row " << (i + 1);
                throw SchemaError(os.str());
            }
    }
    return ds;
}

void save_dataset(const std::string& path, const Dataset& ds, const Schema& schema) {
    CsvTable t;
    t.names = ds.names;
    t.names.push_back(schema.treatment);
    t.names.push_back(schema.outcome);
    const bool grouped = ds.grouped();
    if (grouped) t.names.push_back(schema.group.empty() ? "g" : schema.group);
    t.names.push_back(schema.source.empty() ? "d" : schema.source);

    const std::size_t n = ds.n();
    const std::size_t d = ds.d();
    t.values = Matrix(n, t.names.size());
    for (std::size_t i = 0; i < n; ++i) {
        double* row = t.values.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = ds.x(i, j);
        std::size_t j = d;
        row[j++] = static_cast<double>(ds.a[i]);
        row[j++] = ds.y[i];
        if (grouped) row[j++] = static_cast<double>(ds.g[i]);
        row[j] = static_cast<double>(ds.source_id);
    }
    write_csv(path, t);
}

namespace {

int binarize(const Matrix& x, std::size_t i, const BinarizeRule& rule) {
    const double v = x(i, static_cast<std::size_t>(rule.column));
    if (rule.threshold) return v >= *rule.threshold ? 1 : 0;
    return v != 0.0 ? 1 : 0;
}

void check_rule(const Dataset& ds, const BinarizeRule& rule) {
    if (rule.column < 0 || static_cast<std::size_t>(rule.column) >= ds.d())
        throw ConfigError("group rule references a covariate column that does not exist");
    if (!rule.threshold && !column_is_binary(ds.x, static_cast<std::size_t>(rule.column)))
        throw ConfigError("group rule column '" + ds.names[rule.column] +
                          "' is not binary and no threshold was given");
}

} // namespace

Dataset assign_groups(const Dataset& ds, const BinarizeRule& g1, const BinarizeRule& g2) {
    check_rule(ds, g1);
    check_rule(ds, g2);
    Dataset out = ds;
    out.g.resize(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i)
        out.g[i] = 2 * binarize(ds.x, i, g1) + binarize(ds.x, i, g2);
    return out;
}

std::vector<std::size_t> group_sizes(const Dataset& ds, int group_count) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(group_count), 0);
    for (int gi : ds.g) {
        if (gi < 0 || gi >= group_count) throw SupportError("group id out of range");
        ++counts[static_cast<std::size_t>(gi)];
    }
    return counts;
}

GroupSupport split_support(const Dataset& rct, const std::vector<const Dataset*>& obs,
                           int group_count) {
    GroupSupport s;
    const auto rct_counts = group_sizes(rct, group_count);
    for (int i = 0; i < group_count; ++i) {
        if (rct_counts[static_cast<std::size_t>(i)] > 0) s.validation.insert(i);
        else s.extrapolated.insert(i);
    }
    for (const Dataset* ds : obs) {
        const auto counts = group_sizes(*ds, group_count);
        for (int i = 0; i < group_count; ++i)
            if (counts[static_cast<std::size_t>(i)] == 0) {
                std::ostringstream os;
                os << "observational dataset (source " << ds->source_id
                   << ") has no rows in group " << i;
                throw SupportError(os.str());
            }
    }
    return s;
}

} // namespace gatex
