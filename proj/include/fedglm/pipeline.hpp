#pragma once

#include <string>
#include <vector>

#include "fedglm/glm.hpp"
#include "fedglm/glmm.hpp"
#include "fedglm/lm.hpp"
#include "fedglm/moments.hpp"
#include "fedglm/pseudogen.hpp"
#include "fedglm/table.hpp"

namespace fedglm {

struct PipelineConfig {
    int k_max = 4;
    int subgroup_base = 250;
    int subgroup_cap = 500;
    SolverOptions solver;
};

/// Provider-side aggregation: resolve the CSV to complete-case numeric
/// columns, partition rows in order, summarize every subgroup.
ProviderSummary aggregate_table(const Table& table, const std::string& provider_id,
                                const PipelineConfig& config);
ProviderSummary aggregate_csv(const std::string& csv_path,
                              const std::string& provider_id,
                              const std::vector<std::string>& variables,
                              const PipelineConfig& config,
                              int* dropped_rows = nullptr);

/// Pooled pseudo-data across providers, as a CSV-ready structure: the
/// provider's variables plus `group_id` (provider string) and `subgroup`.
struct PseudoPool {
    std::vector<std::string> variable_names;
    std::vector<std::string> group_ids;  // per row
    std::vector<int> subgroup;           // per row
    Matrix values;
};

PseudoPool pool_pseudo(const std::vector<ProviderSummary>& summaries,
                       const SolverOptions& opts);
void write_pseudo_csv(const std::string& path, const PseudoPool& pool);
PseudoPool read_pseudo_csv(const std::string& path);

/// Fit report serialization matching the published table structure:
/// estimate, standard error, Wald CI per coefficient, sigma_u, loglik,
/// truncated AIC/BIC, n, m.
std::string mixed_fit_to_json(const MixedFitResult& fit,
                              const std::vector<std::string>& names,
                              const std::string& family);
std::string glm_fit_to_json(const FitResult& fit,
                            const std::vector<std::string>& names,
                            const std::string& family);

} // namespace fedglm
