#include "fedglm/summary_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fedglm/multi_index.hpp"

namespace fedglm {

using nlohmann::ordered_json;

std::string summary_to_json(const ProviderSummary& summary) {
    ordered_json doc;
    doc["format_version"] = kSummaryFormatVersion;
    doc["provider_id"] = summary.provider_id;
    doc["variables"] = ordered_json::array();
    for (std::size_t j = 0; j < summary.variable_names.size(); ++j) {
        ordered_json v;
        v["name"] = summary.variable_names[j];
        v["kind"] = summary.variable_kinds[j] == VariableKind::numeric
                        ? "numeric"
                        : "binary-dummy";
        doc["variables"].push_back(v);
    }
    doc["k_max"] = summary.k_max;
    doc["subgroups"] = ordered_json::array();
    for (const auto& sg : summary.subgroups) {
        ordered_json s;
        s["n"] = sg.n;
        s["means"] = std::vector<double>(sg.means.begin(), sg.means.end());
        s["variances"] =
            std::vector<double>(sg.variances.begin(), sg.variances.end());
        s["std_moments"] = ordered_json::array();
        for (std::size_t t = 0; t < sg.indices.size(); ++t) {
            ordered_json mj;
            mj["r"] = sg.indices[t].exponents;
            mj["value"] = sg.std_moments[static_cast<Eigen::Index>(t)];
            s["std_moments"].push_back(mj);
        }
        doc["subgroups"].push_back(s);
    }
    return doc.dump(2) + "\n";
}

ProviderSummary summary_from_json(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    ProviderSummary summary;
    if (doc.at("format_version").get<int>() != kSummaryFormatVersion)
        throw std::runtime_error("unsupported summary format_version");
    summary.provider_id = doc.at("provider_id").get<std::string>();
    for (const auto& v : doc.at("variables")) {
        summary.variable_names.push_back(v.at("name").get<std::string>());
        summary.variable_kinds.push_back(v.at("kind").get<std::string>() == "numeric"
                                             ? VariableKind::numeric
                                             : VariableKind::binary_dummy);
    }
    summary.k_max = doc.at("k_max").get<int>();
    for (const auto& s : doc.at("subgroups")) {
        SubgroupSummary sg;
        sg.n = s.at("n").get<int>();
        sg.p = summary.p();
        sg.k_max = summary.k_max;
        const auto means = s.at("means").get<std::vector<double>>();
        const auto variances = s.at("variances").get<std::vector<double>>();
        sg.means = Eigen::Map<const Vector>(means.data(), means.size());
        sg.variances = Eigen::Map<const Vector>(variances.data(), variances.size());
        const auto& moments = s.at("std_moments");
        sg.std_moments.resize(static_cast<Eigen::Index>(moments.size()));
        Eigen::Index t = 0;
        for (const auto& mj : moments) {
            sg.indices.push_back(MultiIndex{mj.at("r").get<std::vector<int>>()});
            sg.std_moments[t++] = mj.at("value").get<double>();
        }
        summary.subgroups.push_back(std::move(sg));
    }
    return summary;
}

void write_summary_file(const std::string& path, const ProviderSummary& summary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write summary file: " + path);
    out << summary_to_json(summary);
    if (!out) throw std::runtime_error("write failed: " + path);
}

ProviderSummary read_summary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open summary file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return summary_from_json(text);
}

ValidationReport validate_summary(const ProviderSummary& summary) {
    ValidationReport report;
    auto flag = [&](const std::string& msg) { report.violations.push_back(msg); };

    const int p = summary.p();
    if (p < 1) flag("no variables declared");
    const auto expected = enumerate_multi_indices(p, summary.k_max);

    for (std::size_t k = 0; k < summary.subgroups.size(); ++k) {
        const auto& sg = summary.subgroups[k];
        const std::string where = "subgroup " + std::to_string(k) + ": ";
        if (sg.n < 2) flag(where + "n < 2");
        if (sg.means.size() != p || sg.variances.size() != p)
            flag(where + "means/variances length != p");
        if ((sg.variances.array() < 0).any()) flag(where + "negative variance");
        if (!sg.means.allFinite() || !sg.variances.allFinite() ||
            !sg.std_moments.allFinite())
            flag(where + "non-finite value");
        if (sg.indices.size() != expected.size()) {
            flag(where + "expected " + std::to_string(expected.size()) +
                 " moments, found " + std::to_string(sg.indices.size()));
            continue;
        }
        for (std::size_t t = 0; t < expected.size(); ++t)
            if (!(sg.indices[t] == expected[t])) {
                flag(where + "moment " + std::to_string(t) +
                     " out of canonical order");
                break;
            }

        const double order2 = (sg.n - 1.0) / sg.n;
        Matrix second = Matrix::Zero(p, p);
        for (std::size_t t = 0; t < sg.indices.size(); ++t) {
            const auto& r = sg.indices[t];
            const double v = sg.std_moments[static_cast<Eigen::Index>(t)];
            if (r.order() == 1) {
                if (std::abs(v) > 1e-12)
                    flag(where + "order-1 moment " + r.to_string() +
                         " not zero: " + std::to_string(v));
            } else if (r.order() == 2) {
                int a = -1, b = -1;
                for (int j = 0; j < p; ++j) {
                    if (r.exponents[j] == 2) a = b = j;
                    if (r.exponents[j] == 1) (a < 0 ? a : b) = j;
                }
                second(a, b) = second(b, a) = v;
                if (a == b && std::abs(v - order2) > 1e-12)
                    flag(where + "pure order-2 moment " + r.to_string() +
                         " is " + std::to_string(v) + ", expected (n-1)/n = " +
                         std::to_string(order2));
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(second);
        if (es.eigenvalues().minCoeff() < -1e-10)
            flag(where + "order-2 moment block is not positive semidefinite "
                         "(min eigenvalue " +
                 std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    return report;
}

} // namespace fedglm
