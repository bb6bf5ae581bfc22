#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gatex/linalg.hpp"

namespace gatex {

// Column-name map used when ingesting a CSV.
struct Schema {
    std::string treatment = "a";
    std::string outcome = "y";
    std::string group;  // empty: groups assigned later via assign_groups
    std::string source; // empty: source id defaults to 0
    int group_count = 0; // when > 0, loaded group ids are validated against it
};

// Immutable after construction; safe to share across threads read-only.
struct Dataset {
    Matrix x;                           // n x d covariates
    std::vector<std::string> names;     // covariate names
    std::vector<std::uint8_t> a;        // binary treatment
    std::vector<double> y;              // outcome
    std::vector<int> g;                 // group ids, -1 when unassigned
    int source_id = 0;                  // D; 0 is the RCT
    std::vector<std::int32_t> base_row; // provenance of simulated rows (may be empty)

    std::size_t n() const { return y.size(); }
    std::size_t d() const { return x.cols; }
    int col(const std::string& name) const;
    bool grouped() const { return !g.empty() && g[0] >= 0; }
};

Dataset load_dataset(const std::string& path, const Schema& schema);
void save_dataset(const std::string& path, const Dataset& ds, const Schema& schema = {});

// One half of the group cross: a covariate binarized either by >= threshold
// or taken as-is (column must then be 0/1 valued).
struct BinarizeRule {
    int column = -1;
    std::optional<double> threshold;
};

// group id = 2*g1 + g2 over the binarized pair
Dataset assign_groups(const Dataset& ds, const BinarizeRule& g1, const BinarizeRule& g2);

struct GroupSupport {
    std::set<int> validation;   // groups with RCT rows
    std::set<int> extrapolated; // the rest
};

// Splits {0..group_count-1} by RCT support and verifies that every
// observational dataset has rows in every group.
GroupSupport split_support(const Dataset& rct, const std::vector<const Dataset*>& obs,
                           int group_count);

std::vector<std::size_t> group_sizes(const Dataset& ds, int group_count);

// true when every value in the column is 0 or 1
bool column_is_binary(const Matrix& x, std::size_t j);

} // namespace gatex
