#include "fedglm/moments.hpp"

#include <cmath>
#include <stdexcept>

#include "fedglm/kernels.hpp"

namespace fedglm {

double SubgroupSummary::std_moment(const MultiIndex& r) const {
    for (std::size_t t = 0; t < indices.size(); ++t)
        if (indices[t] == r) return std_moments[static_cast<int>(t)];
    throw std::out_of_range("SubgroupSummary: unknown moment index " + r.to_string());
}

int ProviderSummary::total_n() const {
    int total = 0;
    for (const auto& sg : subgroups) total += sg.n;
    return total;
}

double raw_moment(const Matrix& data, const MultiIndex& r) {
    const int n = static_cast<int>(data.rows());
    const int p = static_cast<int>(data.cols());
    if (n < 1) throw std::invalid_argument("raw_moment: empty data");
    if (r.size() != p) throw std::invalid_argument("raw_moment: index length != p");
    if (!data.allFinite()) throw std::invalid_argument("raw_moment: non-finite data");

    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int j = 0; j < p; ++j) {
            for (int e = 0; e < r.exponents[j]; ++e) prod *= data(i, j);
        }
        acc += prod;
    }
    return acc / n;
}

SubgroupSummary summarize_subgroup(const Matrix& data, int k_max) {
    const int n = static_cast<int>(data.rows());
    const int p = static_cast<int>(data.cols());
    if (n < 2) throw std::invalid_argument("summarize_subgroup: need n >= 2");
    if (!data.allFinite())
        throw std::invalid_argument("summarize_subgroup: non-finite data");

    SubgroupSummary s;
    s.n = n;
    s.p = p;
    s.k_max = k_max;
    s.means = data.colwise().mean();
    s.variances.resize(p);

    Matrix z(n, p);
    for (int j = 0; j < p; ++j) {
        const double var =
            (data.col(j).array() - s.means[j]).square().sum() / (n - 1);
        s.variances[j] = var;
        if (var <= 0.0)
            throw std::invalid_argument(
                "summarize_subgroup: column " + std::to_string(j) +
                " has zero variance; standardization undefined");
        z.col(j) = (data.col(j).array() - s.means[j]) / std::sqrt(var);
    }

    s.indices = enumerate_multi_indices(p, k_max);
    s.std_moments.resize(static_cast<int>(s.indices.size()));
    PowerTable tab = PowerTable::build(z, k_max);
    moment_values_omp(tab, s.indices, s.std_moments.data());
    return s;
}

std::vector<int> partition_subgroups(int n, int base, int cap) {
    if (n < 1) throw std::invalid_argument("partition_subgroups: n must be >= 1");
    if (base < 1 || cap < base || cap > 2 * base)
        throw std::invalid_argument("partition_subgroups: need 1 <= base <= cap <= 2*base");
    if (n <= cap) return {n};
    const int q = n / base;
    const int r = n % base;
    std::vector<int> sizes;
    if (r == 0) {
        sizes.assign(q, base);
    } else {
        sizes.assign(q - 1, base);
        sizes.push_back(base + r);
    }
    return sizes;
}

} // namespace fedglm
