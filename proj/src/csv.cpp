#include "gatex/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gatex/errors.hpp"

namespace gatex {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
        out.back().pop_back();
    return out;
}

} // namespace

double parse_double(const std::string& field, std::size_t line_no, const std::string& path) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        std::ostringstream os;
        os << path << ":" << line_no << ": cannot parse numeric field '" << field << "'";
        throw ParseError(os.str());
    }
    return v;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file, header required");
    CsvTable table;
    table.names = split_line(line);
    const std::size_t ncol = table.names.size();
    if (ncol == 0 || table.names[0].empty())
        throw ParseError(path + ": malformed header");

    std::vector<double> values;
    std::size_t nrow = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_line(line);
        if (fields.size() != ncol) {
            std::ostringstream os;
            os << path << ":" << line_no << ": expected " << ncol << " fields, got "
               << fields.size();
            throw ParseError(os.str());
        }
        for (const auto& f : fields) values.push_back(parse_double(f, line_no, path));
        ++nrow;
    }
    table.values.rows = nrow;
    table.values.cols = ncol;
    table.values.data = std::move(values);
    return table;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (j) out << ',';
        out << table.names[j];
    }
    out << '\n';
    for (std::size_t i = 0; i < table.values.rows; ++i) {
        const double* row = table.values.row(i);
        for (std::size_t j = 0; j < table.values.cols; ++j) {
            if (j) out << ',';
            out << format_double(row[j]);
        }
        out << '\n';
    }
}

} // namespace gatex
