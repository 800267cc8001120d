#include "fedglm/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fedglm {

using nlohmann::ordered_json;

ProviderSummary aggregate_table(const Table& table, const std::string& provider_id,
                                const PipelineConfig& config) {
    if (table.n() < 2)
        throw std::runtime_error("provider " + provider_id +
                                 ": fewer than two complete rows");
    ProviderSummary summary;
    summary.provider_id = provider_id;
    summary.variable_names = table.names;
    summary.variable_kinds = table.kinds;
    summary.k_max = config.k_max;

    const auto sizes =
        partition_subgroups(table.n(), config.subgroup_base, config.subgroup_cap);
    int row = 0;
    for (int size : sizes) {
        try {
            summary.subgroups.push_back(
                summarize_subgroup(table.values.middleRows(row, size), config.k_max));
        } catch (const std::exception& e) {
            throw std::runtime_error("provider " + provider_id + " rows " +
                                     std::to_string(row) + ".." +
                                     std::to_string(row + size - 1) + ": " + e.what());
        }
        row += size;
    }
    return summary;
}

ProviderSummary aggregate_csv(const std::string& csv_path,
                              const std::string& provider_id,
                              const std::vector<std::string>& variables,
                              const PipelineConfig& config, int* dropped_rows) {
    const CsvFile csv = read_csv(csv_path);
    const Table table = resolve_table(csv, variables, dropped_rows);
    return aggregate_table(table, provider_id, config);
}

PseudoPool pool_pseudo(const std::vector<ProviderSummary>& summaries,
                       const SolverOptions& opts) {
    PseudoPool pool;
    if (summaries.empty()) throw std::invalid_argument("pool_pseudo: no summaries");
    pool.variable_names = summaries.front().variable_names;

    int total = 0;
    for (const auto& s : summaries) {
        if (s.variable_names != pool.variable_names)
            throw std::runtime_error("provider " + s.provider_id +
                                     " declares a different variable schema");
        total += s.total_n();
    }
    pool.values.resize(total, static_cast<Eigen::Index>(pool.variable_names.size()));
    pool.group_ids.reserve(total);
    pool.subgroup.reserve(total);

    int row = 0;
    for (const auto& s : summaries) {
        SolverOptions provider_opts = opts;
        // Stable per-provider seed so the pool does not depend on ordering
        // of other providers' work.
        std::uint64_t h = 1469598103934665603ULL;
        for (char c : s.provider_id) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
        provider_opts.seed = opts.seed ^ h;
        auto datasets = generate_provider(s, provider_opts);
        for (const auto& ds : datasets) {
            pool.values.middleRows(row, ds.values.rows()) = ds.values;
            for (Eigen::Index i = 0; i < ds.values.rows(); ++i) {
                pool.group_ids.push_back(s.provider_id);
                pool.subgroup.push_back(ds.subgroup_index);
            }
            row += static_cast<int>(ds.values.rows());
        }
    }
    return pool;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

void write_pseudo_csv(const std::string& path, const PseudoPool& pool) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write pseudo CSV: " + path);
    for (const auto& name : pool.variable_names) out << name << ',';
    out << "group_id,subgroup\n";
    for (Eigen::Index i = 0; i < pool.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < pool.values.cols(); ++j)
            out << format_double(pool.values(i, j)) << ',';
        out << pool.group_ids[i] << ',' << pool.subgroup[i] << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

PseudoPool read_pseudo_csv(const std::string& path) {
    const CsvFile csv = read_csv(path);
    if (csv.header.size() < 3 || csv.header[csv.header.size() - 2] != "group_id" ||
        csv.header.back() != "subgroup")
        throw std::runtime_error("not a pseudo-data CSV (missing group_id/subgroup): " +
                                 path);
    PseudoPool pool;
    pool.variable_names.assign(csv.header.begin(), csv.header.end() - 2);
    const int p = static_cast<int>(pool.variable_names.size());
    pool.values.resize(static_cast<Eigen::Index>(csv.rows.size()), p);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        for (int j = 0; j < p; ++j) pool.values(i, j) = std::stod(csv.rows[i][j]);
        pool.group_ids.push_back(csv.rows[i][p]);
        pool.subgroup.push_back(std::stoi(csv.rows[i][p + 1]));
    }
    return pool;
}

namespace {

ordered_json coefficients_json(const Vector& est, const Vector& se,
                               const std::vector<WaldInterval>& ci,
                               const std::vector<std::string>& names) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index k = 0; k < est.size(); ++k) {
        ordered_json c;
        c["name"] = names[static_cast<std::size_t>(k)];
        c["estimate"] = est[k];
        c["std_error"] = se[k];
        c["ci_lower"] = ci[static_cast<std::size_t>(k)].lower;
        c["ci_upper"] = ci[static_cast<std::size_t>(k)].upper;
        arr.push_back(c);
    }
    return arr;
}

} // namespace

std::string mixed_fit_to_json(const MixedFitResult& fit,
                              const std::vector<std::string>& names,
                              const std::string& family) {
    ordered_json doc;
    doc["family"] = family;
    doc["random_intercept"] = true;
    doc["coefficients"] = coefficients_json(fit.beta, fit.beta_se, wald_ci(fit), names);
    doc["sigma_u"] = fit.sigma_u;
    if (fit.residual_sigma > 0) doc["residual_sigma"] = fit.residual_sigma;
    doc["loglik"] = fit.loglik;
    doc["aic"] = fit.aic;
    doc["bic"] = fit.bic;
    doc["n"] = fit.n;
    doc["m"] = fit.m;
    doc["nagq"] = fit.nagq;
    doc["converged"] = fit.converged;
    return doc.dump(2) + "\n";
}

std::string glm_fit_to_json(const FitResult& fit,
                            const std::vector<std::string>& names,
                            const std::string& family) {
    MixedFitResult view;
    view.beta = fit.coefficients;
    view.beta_se = fit.standard_errors;
    ordered_json doc;
    doc["family"] = family;
    doc["random_intercept"] = false;
    doc["coefficients"] =
        coefficients_json(fit.coefficients, fit.standard_errors, wald_ci(view), names);
    doc["loglik"] = fit.loglik_fitted;
    doc["aic"] = fit.aic;
    doc["bic"] = fit.bic;
    doc["deviance"] = fit.deviance;
    doc["n"] = fit.n;
    doc["converged"] = fit.converged;
    return doc.dump(2) + "\n";
}

} // namespace fedglm
