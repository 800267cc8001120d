#include "fedglm/kernels.hpp"

#include <stdexcept>

namespace fedglm {

PowerTable PowerTable::build(const Matrix& z, int k_max) {
    PowerTable tab;
    tab.n = static_cast<int>(z.rows());
    tab.p = static_cast<int>(z.cols());
    tab.k_max = k_max;
    tab.pw.resize(static_cast<std::size_t>(tab.n) * tab.p * (k_max + 1));
    tab.rebuild(z);
    return tab;
}

void PowerTable::rebuild(const Matrix& z) {
    if (static_cast<int>(z.rows()) != n || static_cast<int>(z.cols()) != p)
        throw std::invalid_argument("PowerTable::rebuild: shape mismatch");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) {
            double* cell = &pw[static_cast<std::size_t>(i * p + j) * (k_max + 1)];
            const double v = z(i, j);
            cell[0] = 1.0;
            for (int k = 1; k <= k_max; ++k) cell[k] = cell[k - 1] * v;
        }
    }
}

namespace {

inline double moment_one(const PowerTable& tab, const MultiIndex& r) {
    const int n = tab.n, p = tab.p;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int j = 0; j < p; ++j) {
            const int e = r.exponents[j];
            if (e) prod *= tab.at(i, j, e);
        }
        acc += prod;
    }
    return acc / n;
}

inline void jacobian_row(const PowerTable& tab, const MultiIndex& r, Matrix& J,
                         int t) {
    const int n = tab.n, p = tab.p;
    const double inv_n = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        // prefix[j] = prod_{k<j} z_ik^{r_k}; suffix accumulated backwards
        double prod = 1.0;
        for (int j = 0; j < p; ++j) {
            const int e = r.exponents[j];
            double others = prod;
            for (int k = j + 1; k < p; ++k) {
                const int ek = r.exponents[k];
                if (ek) others *= tab.at(i, k, ek);
            }
            J(t, j * n + i) =
                e == 0 ? 0.0 : e * inv_n * tab.at(i, j, e - 1) * others;
            if (e) prod *= tab.at(i, j, e);
        }
    }
}

} // namespace

void moment_values_serial(const PowerTable& tab,
                          const std::vector<MultiIndex>& indices, double* out) {
    for (std::size_t t = 0; t < indices.size(); ++t)
        out[t] = moment_one(tab, indices[t]);
}

void moment_values_omp(const PowerTable& tab,
                       const std::vector<MultiIndex>& indices, double* out) {
    const int nu = static_cast<int>(indices.size());
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nu; ++t) out[t] = moment_one(tab, indices[t]);
}

void moment_jacobian_serial(const PowerTable& tab,
                            const std::vector<MultiIndex>& indices, Matrix& J) {
    for (std::size_t t = 0; t < indices.size(); ++t)
        jacobian_row(tab, indices[t], J, static_cast<int>(t));
}

void moment_jacobian_omp(const PowerTable& tab,
                         const std::vector<MultiIndex>& indices, Matrix& J) {
    const int nu = static_cast<int>(indices.size());
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nu; ++t) jacobian_row(tab, indices[t], J, t);
}

Matrix moment_gram(const std::vector<MultiIndex>& indices, const Matrix& J,
                   int n, int p) {
    const int nu = static_cast<int>(indices.size());
    if (J.rows() != nu || J.cols() != static_cast<Eigen::Index>(n) * p)
        throw std::invalid_argument("moment_gram: Jacobian shape mismatch");
    Matrix G = Matrix::Zero(nu, nu);
    std::vector<int> active;
    active.reserve(nu);
    for (int j = 0; j < p; ++j) {
        active.clear();
        for (int t = 0; t < nu; ++t)
            if (indices[t].exponents[j] > 0) active.push_back(t);
        const int na = static_cast<int>(active.size());
        if (na == 0) continue;
        Matrix A(na, n);
        for (int a = 0; a < na; ++a)
            A.row(a) = J.block(active[a], static_cast<Eigen::Index>(j) * n, 1, n);
        Matrix S;
        S.noalias() = A * A.transpose();
        for (int a = 0; a < na; ++a)
            for (int b = 0; b < na; ++b) G(active[a], active[b]) += S(a, b);
    }
    return G;
}

} // namespace fedglm
