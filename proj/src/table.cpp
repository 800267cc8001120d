#include "fedglm/table.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fedglm {

int Table::column(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

Vector Table::col(const std::string& name) const {
    const int j = column(name);
    if (j < 0) throw std::invalid_argument("Table: no column named '" + name + "'");
    return values.col(j);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell += ch;
        }
    }
    cells.push_back(cell);
    return cells;
}

bool parse_double(const std::string& s, double* out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (errno || end != begin + s.size()) return false;
    *out = v;
    return true;
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "null";
}

std::string format_double(double v) {
    // Shortest representation that round-trips, so files are byte-stable.
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

CsvFile read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path);
    CsvFile csv;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty CSV file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    csv.header = split_line(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != csv.header.size())
            throw std::runtime_error("CSV row with " + std::to_string(cells.size()) +
                                     " cells, expected " +
                                     std::to_string(csv.header.size()) + ": " + path);
        csv.rows.push_back(std::move(cells));
    }
    return csv;
}

void write_csv(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV file: " + path);
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (j) out << ',';
        out << table.names[j];
    }
    out << '\n';
    for (int i = 0; i < table.n(); ++i) {
        for (int j = 0; j < table.p(); ++j) {
            if (j) out << ',';
            out << format_double(table.values(i, j));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Table resolve_table(const CsvFile& csv, const std::vector<std::string>& variables,
                    int* dropped_rows) {
    std::vector<int> src_cols;
    for (const auto& v : variables) {
        auto it = std::find(csv.header.begin(), csv.header.end(), v);
        if (it == csv.header.end())
            throw std::runtime_error("CSV is missing column '" + v + "'");
        src_cols.push_back(static_cast<int>(it - csv.header.begin()));
    }

    // Complete cases only.
    std::vector<int> keep;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        bool complete = true;
        for (int c : src_cols)
            if (is_missing(csv.rows[i][c])) { complete = false; break; }
        if (complete) keep.push_back(static_cast<int>(i));
    }

    // A column is numeric when every kept cell parses as a double.
    std::vector<bool> numeric(variables.size(), true);
    for (std::size_t v = 0; v < variables.size(); ++v) {
        double tmp;
        for (int i : keep) {
            if (!parse_double(csv.rows[i][src_cols[v]], &tmp)) {
                numeric[v] = false;
                break;
            }
        }
    }

    Table table;
    std::vector<std::vector<std::string>> levels(variables.size());
    for (std::size_t v = 0; v < variables.size(); ++v) {
        if (numeric[v]) {
            table.names.push_back(variables[v]);
            table.kinds.push_back(VariableKind::numeric);
        } else {
            std::set<std::string> uniq;
            for (int i : keep) uniq.insert(csv.rows[i][src_cols[v]]);
            if (uniq.size() < 2)
                throw std::runtime_error("column '" + variables[v] +
                                         "' has fewer than two levels");
            // First sorted level is the reference and gets no dummy.
            levels[v].assign(std::next(uniq.begin()), uniq.end());
            for (const auto& lev : levels[v]) {
                table.names.push_back(variables[v] + "_" + lev);
                table.kinds.push_back(VariableKind::binary_dummy);
            }
        }
    }

    table.values.resize(static_cast<Eigen::Index>(keep.size()),
                        static_cast<Eigen::Index>(table.names.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
        int out_col = 0;
        for (std::size_t v = 0; v < variables.size(); ++v) {
            const std::string& cell = csv.rows[keep[r]][src_cols[v]];
            if (numeric[v]) {
                double val = 0.0;
                parse_double(cell, &val);
                table.values(r, out_col++) = val;
            } else {
                for (const auto& lev : levels[v])
                    table.values(r, out_col++) = cell == lev ? 1.0 : 0.0;
            }
        }
    }

    if (dropped_rows)
        *dropped_rows = static_cast<int>(csv.rows.size() - keep.size());
    return table;
}

} // namespace fedglm
