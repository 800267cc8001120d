#pragma once

#include <string>
#include <vector>

#include "fedglm/moments.hpp"
#include "fedglm/types.hpp"

namespace fedglm {

/// A numeric table: named columns over a dense matrix (rows = observations).
struct Table {
    std::vector<std::string> names;
    std::vector<VariableKind> kinds;
    Matrix values;

    int n() const { return static_cast<int>(values.rows()); }
    int p() const { return static_cast<int>(values.cols()); }
    int column(const std::string& name) const;  // -1 when absent
    Vector col(const std::string& name) const;  // throws when absent
};

/// Raw CSV contents before type resolution.
struct CsvFile {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvFile read_csv(const std::string& path);
void write_csv(const std::string& path, const Table& table);

/// Resolve a CSV into a numeric table restricted to `variables`:
/// numeric-looking columns are parsed as doubles; any other column is
/// dummy-expanded against its first level in sorted order, producing
/// columns named "<var>_<level>". Rows with missing or unparseable cells
/// are dropped; the count of dropped rows is returned through
/// *dropped_rows when non-null.
Table resolve_table(const CsvFile& csv, const std::vector<std::string>& variables,
                    int* dropped_rows = nullptr);

} // namespace fedglm
