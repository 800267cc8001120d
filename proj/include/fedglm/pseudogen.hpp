#pragma once

#include <string>
#include <vector>

#include "fedglm/lm.hpp"
#include "fedglm/moments.hpp"
#include "fedglm/types.hpp"

namespace fedglm {

/// Moment-matching residual problem on the standardized scale: unknowns
/// are the n*p flattened pseudo values, residual t is the difference
/// between the t-th standardized moment of the current pseudo matrix and
/// its target. Underdetermined whenever n*p exceeds the target count.
struct MomentResidualProblem {
    std::vector<MultiIndex> indices;
    Vector targets;  // aligned with indices
    int n = 0;
    int p = 0;
    int k_max = 4;

    static MomentResidualProblem from_summary(const SubgroupSummary& summary);

    Vector residuals(const Vector& x) const;
    Matrix jacobian(const Vector& x) const;

    int nu() const { return static_cast<int>(indices.size()); }
};

struct PseudoDataset {
    Matrix values;  // n x p, original scale
    std::string group_id;
    int subgroup_index = 0;
    double achieved_max_residual = 0.0;
    int solver_iterations = 0;
};

/// Solve the moment-matching problem from a seeded standard-normal start,
/// then map back to the original scale via x = mean + s * z. Restarts with
/// fresh seeds on convergence failure, up to opts.max_restarts, then throws
/// with the best residual reached.
PseudoDataset generate_pseudo_data(const SubgroupSummary& summary,
                                   const SolverOptions& opts = {});

/// One pseudo dataset per subgroup, all carrying the provider id as group
/// label. Subgroups are generated independently (parallel when OpenMP is
/// enabled) and ordered by subgroup index.
std::vector<PseudoDataset> generate_provider(const ProviderSummary& summary,
                                             const SolverOptions& opts = {});

} // namespace fedglm
