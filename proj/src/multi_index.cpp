#include "fedglm/multi_index.hpp"

#include <stdexcept>

namespace fedglm {

std::string MultiIndex::to_string() const {
    std::string s = "(";
    for (int j = 0; j < size(); ++j) {
        if (j) s += ",";
        s += std::to_string(exponents[j]);
    }
    s += ")";
    return s;
}

std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    std::int64_t result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
    }
    return result;
}

namespace {

// Compositions of `remaining` into slots [j, p), first slot taking the
// largest exponent first so the full listing is lexicographically descending.
void compositions(int remaining, int j, int p, std::vector<int>& current,
                  std::vector<MultiIndex>& out) {
    if (j == p - 1) {
        current[j] = remaining;
        out.push_back(MultiIndex{current});
        current[j] = 0;
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[j] = e;
        compositions(remaining - e, j + 1, p, current, out);
    }
    current[j] = 0;
}

} // namespace

std::vector<MultiIndex> enumerate_multi_indices(int p, int k_max) {
    if (p < 1) throw std::invalid_argument("enumerate_multi_indices: p must be >= 1");
    if (k_max < 1) throw std::invalid_argument("enumerate_multi_indices: k_max must be >= 1");

    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(binomial(p + k_max, k_max) - 1));
    std::vector<int> current(p, 0);
    for (int order = 1; order <= k_max; ++order) {
        compositions(order, 0, p, current, out);
    }
    return out;
}

std::int64_t moment_count_k4(int p) {
    return 4LL * p + (static_cast<std::int64_t>(p) * p - p) / 2
        + 5 * binomial(p, 2) + 4 * binomial(p, 3) + binomial(p, 4);
}

} // namespace fedglm
