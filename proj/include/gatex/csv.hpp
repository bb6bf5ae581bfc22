#pragma once

#include <string>
#include <vector>

#include "gatex/linalg.hpp"

namespace gatex {

struct CsvTable {
    std::vector<std::string> names;
    Matrix values; // one row per data line
};

// Strict numeric CSV: comma separated, header row required, '.' decimal.
CsvTable read_csv(const std::string& path);

// Shortest round-trip formatting; read_csv(write_csv(t)) is bit-identical.
void write_csv(const std::string& path, const CsvTable& table);

std::string format_double(double v);
double parse_double(const std::string& field, std::size_t line_no, const std::string& path);

} // namespace gatex
