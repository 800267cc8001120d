#pragma once

#include <string>
#include <vector>

#include "fedglm/multi_index.hpp"
#include "fedglm/types.hpp"

namespace fedglm {

/// Per-subgroup summary: sizes and means/variances on the original scale,
/// raw moments of the standardized columns for every index with
/// 1 <= |r| <= k_max, in canonical (graded lexicographic) order.
struct SubgroupSummary {
    int n = 0;
    int p = 0;
    int k_max = 4;
    Vector means;      // length p
    Vector variances;  // length p, sample variance (n-1 denominator)
    std::vector<MultiIndex> indices;
    Vector std_moments;  // aligned with indices

    double std_moment(const MultiIndex& r) const;
};

enum class VariableKind { numeric, binary_dummy };

struct ProviderSummary {
    std::string provider_id;
    std::vector<std::string> variable_names;
    std::vector<VariableKind> variable_kinds;
    int k_max = 4;
    std::vector<SubgroupSummary> subgroups;

    int p() const { return static_cast<int>(variable_names.size()); }
    int total_n() const;
};

/// (1/n) sum_i prod_j x_ij^{r_j}. Rejects non-finite data.
double raw_moment(const Matrix& data, const MultiIndex& r);

/// Standardize, then collect raw moments of the z-scores up to k_max.
/// Throws if n < 2 or any column has zero variance (names the column
/// by position; callers with names attach them).
SubgroupSummary summarize_subgroup(const Matrix& data, int k_max = 4);

/// Partition rule: groups of at most `cap` rows stay whole; larger groups
/// split into `base`-sized subgroups with the remainder merged into the
/// last one (so every subgroup size stays within [base, cap]).
std::vector<int> partition_subgroups(int n, int base = 250, int cap = 500);

} // namespace fedglm
