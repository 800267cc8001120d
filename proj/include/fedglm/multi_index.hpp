#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedglm {

/// Exponent vector identifying one multivariate sample moment.
/// order() is the exponent sum |r|.
struct MultiIndex {
    std::vector<int> exponents;

    int order() const {
        int s = 0;
        for (int e : exponents) s += e;
        return s;
    }
    int size() const { return static_cast<int>(exponents.size()); }

    bool operator==(const MultiIndex& other) const = default;

    std::string to_string() const;
};

/// n choose k as a 64-bit integer; exact for the small arguments used here.
std::int64_t binomial(int n, int k);

/// All r in N_0^p with 1 <= |r| <= k_max, in graded lexicographic order:
/// ascending total order, lexicographically descending within each order.
/// Count equals C(p + k_max, k_max) - 1.
std::vector<MultiIndex> enumerate_multi_indices(int p, int k_max);

/// Closed-form count of moment targets for k_max = 4 and p >= 4:
/// 4p + (p^2 - p)/2 + 5*C(p,2) + 4*C(p,3) + C(p,4).
std::int64_t moment_count_k4(int p);

} // namespace fedglm
