#pragma once

#include <vector>

#include "fedglm/types.hpp"

namespace fedglm::internal {

/// Rows partitioned by group label; internal indices follow the sorted
/// order of the original labels.
struct GroupedDesign {
    int m = 0;
    std::vector<int> labels;             // internal index -> original label
    std::vector<int> index;              // row -> internal index
    std::vector<std::vector<int>> rows;  // internal index -> row ids
};

GroupedDesign group_rows(const Matrix& X, const std::vector<int>& labels);

} // namespace fedglm::internal
