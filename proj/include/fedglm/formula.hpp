#pragma once

#include <string>
#include <vector>

#include "fedglm/table.hpp"

namespace fedglm {

/// `response ~ var1 + var2 + C(var3)`; C(.) marks a dummy block whose
/// expanded columns are named var3_<level> in the table.
struct ModelFormula {
    std::string response;
    struct Term {
        std::string name;
        bool dummy_block = false;
    };
    std::vector<Term> terms;
};

ModelFormula parse_formula(const std::string& text);

/// Response vector and design matrix (leading intercept column) resolved
/// against a table. Dummy blocks pull in every column with the
/// "<name>_" prefix. Throws on unknown variables.
struct ResolvedModel {
    Vector y;
    Matrix X;
    std::vector<std::string> column_names;  // including "(Intercept)"
};

ResolvedModel build_design(const Table& table, const ModelFormula& formula);

} // namespace fedglm
