#include "fedglm/formula.hpp"

#include <stdexcept>

namespace fedglm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace

ModelFormula parse_formula(const std::string& text) {
    const auto tilde = text.find('~');
    if (tilde == std::string::npos)
        throw std::invalid_argument("formula must contain '~': " + text);
    ModelFormula formula;
    formula.response = trim(text.substr(0, tilde));
    if (formula.response.empty())
        throw std::invalid_argument("formula has no response: " + text);

    std::string rhs = text.substr(tilde + 1);
    std::size_t pos = 0;
    while (pos <= rhs.size()) {
        auto plus = rhs.find('+', pos);
        std::string term = trim(rhs.substr(pos, plus == std::string::npos
                                                    ? std::string::npos
                                                    : plus - pos));
        if (term.empty())
            throw std::invalid_argument("empty term in formula: " + text);
        if (term.size() > 3 && term.substr(0, 2) == "C(" && term.back() == ')') {
            formula.terms.push_back({trim(term.substr(2, term.size() - 3)), true});
        } else {
            formula.terms.push_back({term, false});
        }
        if (plus == std::string::npos) break;
        pos = plus + 1;
    }
    if (formula.terms.empty())
        throw std::invalid_argument("formula has no predictors: " + text);
    return formula;
}

ResolvedModel build_design(const Table& table, const ModelFormula& formula) {
    ResolvedModel model;
    model.y = table.col(formula.response);

    std::vector<int> cols;
    model.column_names.push_back("(Intercept)");
    for (const auto& term : formula.terms) {
        if (term.dummy_block) {
            const std::string prefix = term.name + "_";
            bool found = false;
            for (std::size_t j = 0; j < table.names.size(); ++j) {
                if (table.names[j].rfind(prefix, 0) == 0) {
                    cols.push_back(static_cast<int>(j));
                    model.column_names.push_back(table.names[j]);
                    found = true;
                }
            }
            if (!found)
                throw std::invalid_argument("no dummy columns for C(" + term.name +
                                            ") in table");
        } else {
            const int j = table.column(term.name);
            if (j < 0)
                throw std::invalid_argument("formula variable '" + term.name +
                                            "' not in table");
            cols.push_back(j);
            model.column_names.push_back(term.name);
        }
    }

    model.X.resize(table.n(), static_cast<Eigen::Index>(cols.size()) + 1);
    model.X.col(0).setOnes();
    for (std::size_t k = 0; k < cols.size(); ++k)
        model.X.col(static_cast<Eigen::Index>(k) + 1) = table.values.col(cols[k]);
    return model;
}

} // namespace fedglm
