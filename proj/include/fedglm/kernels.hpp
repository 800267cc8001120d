#pragma once

#include <vector>

#include "fedglm/multi_index.hpp"
#include "fedglm/types.hpp"

namespace fedglm {

/// Cached powers z_ij^k for k = 0..k_max, laid out so that the innermost
/// loop over k is contiguous. Rebuilt whenever the data change.
struct PowerTable {
    int n = 0;
    int p = 0;
    int k_max = 0;
    std::vector<double> pw;  // [(i*p + j)*(k_max+1) + k]

    static PowerTable build(const Matrix& z, int k_max);
    void rebuild(const Matrix& z);

    double at(int i, int j, int k) const {
        return pw[static_cast<std::size_t>(i * p + j) * (k_max + 1) + k];
    }
};

// Each output element is computed by exactly one thread with a fixed-order
// inner sum, so results are identical for any thread count.

/// out[t] = (1/n) sum_i prod_j z_ij^{r_j} for each index in `indices`.
void moment_values_serial(const PowerTable& tab,
                          const std::vector<MultiIndex>& indices, double* out);
void moment_values_omp(const PowerTable& tab,
                       const std::vector<MultiIndex>& indices, double* out);

/// J(t, j*n + i) = (r_j / n) * z_ij^{r_j - 1} * prod_{k != j} z_ik^{r_k},
/// i.e. the derivative of moment t with respect to element (i, j) of the
/// column-major flattened data. J must be nu x (n*p).
void moment_jacobian_serial(const PowerTable& tab,
                            const std::vector<MultiIndex>& indices, Matrix& J);
void moment_jacobian_omp(const PowerTable& tab,
                         const std::vector<MultiIndex>& indices, Matrix& J);

/// J J^T for a moment Jacobian laid out as above (row scaling allowed).
/// Row t is zero throughout column block j unless moment t involves
/// variable j, so the product reduces to one small rank update per
/// variable; for p variables this saves roughly a factor p over the dense
/// product.
Matrix moment_gram(const std::vector<MultiIndex>& indices, const Matrix& J,
                   int n, int p);

} // namespace fedglm
