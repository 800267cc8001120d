#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "fedglm/kernels.hpp"

using namespace fedglm;

namespace {

Matrix random_matrix(int n, int p, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = normal(rng);
    return x;
}

} // namespace

TEST_CASE("PowerTable caches exact powers") {
    const Matrix z = random_matrix(7, 3, 1);
    const PowerTable tab = PowerTable::build(z, 4);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 3; ++j) {
            CHECK(tab.at(i, j, 0) == 1.0);
            double pw = 1.0;
            for (int k = 1; k <= 4; ++k) {
                pw *= z(i, j);
                CHECK(tab.at(i, j, k) == doctest::Approx(pw).epsilon(1e-15));
            }
        }
}

TEST_CASE("serial and omp kernels are bitwise identical") {
    for (auto [n, p] : {std::pair{5, 2}, {60, 4}, {250, 5}}) {
        const Matrix z = random_matrix(n, p, 100 + n);
        const auto indices = enumerate_multi_indices(p, 4);
        const int nu = static_cast<int>(indices.size());
        const PowerTable tab = PowerTable::build(z, 4);

        std::vector<double> a(nu), b(nu);
        moment_values_serial(tab, indices, a.data());
        moment_values_omp(tab, indices, b.data());
        CHECK(a == b);  // exact: same summation order per element

        Matrix Ja(nu, n * p), Jb(nu, n * p);
        moment_jacobian_serial(tab, indices, Ja);
        moment_jacobian_omp(tab, indices, Jb);
        CHECK((Ja - Jb).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("moment values match a direct computation") {
    const Matrix z = random_matrix(9, 3, 5);
    const auto indices = enumerate_multi_indices(3, 4);
    const PowerTable tab = PowerTable::build(z, 4);
    std::vector<double> out(indices.size());
    moment_values_omp(tab, indices, out.data());
    for (std::size_t t = 0; t < indices.size(); ++t) {
        double direct = 0.0;
        for (int i = 0; i < 9; ++i) {
            double prod = 1.0;
            for (int j = 0; j < 3; ++j)
                prod *= std::pow(z(i, j), indices[t].exponents[j]);
            direct += prod;
        }
        CHECK(out[t] == doctest::Approx(direct / 9.0).epsilon(1e-12));
    }
}

TEST_CASE("jacobian matches central finite differences") {
    const int n = 8, p = 3;
    Matrix z = random_matrix(n, p, 77);
    const auto indices = enumerate_multi_indices(p, 4);
    const int nu = static_cast<int>(indices.size());
    PowerTable tab = PowerTable::build(z, 4);
    Matrix J(nu, n * p);
    moment_jacobian_omp(tab, indices, J);

    const double h = 1e-6;
    std::vector<double> plus(nu), minus(nu);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < n; ++i) {
            const double saved = z(i, j);
            z(i, j) = saved + h;
            tab.rebuild(z);
            moment_values_serial(tab, indices, plus.data());
            z(i, j) = saved - h;
            tab.rebuild(z);
            moment_values_serial(tab, indices, minus.data());
            z(i, j) = saved;
            for (int t = 0; t < nu; ++t) {
                const double fd = (plus[t] - minus[t]) / (2 * h);
                CHECK(J(t, j * n + i) == doctest::Approx(fd).epsilon(5e-5));
            }
        }
    }
}

TEST_CASE("blockwise gram equals the dense product") {
    const int n = 12, p = 4;
    Matrix z = random_matrix(n, p, 123);
    const auto indices = enumerate_multi_indices(p, 4);
    const int nu = static_cast<int>(indices.size());
    PowerTable tab = PowerTable::build(z, 4);
    Matrix J(nu, n * p);
    moment_jacobian_serial(tab, indices, J);
    // Row scaling must commute through the blockwise formation.
    for (int t = 0; t < nu; ++t) J.row(t) *= 1.0 / (1.0 + t);

    Matrix dense = J * J.transpose();
    Matrix blocked = moment_gram(indices, J, n, p);
    CHECK((dense - blocked).cwiseAbs().maxCoeff() <
          1e-12 * dense.cwiseAbs().maxCoeff());

    CHECK_THROWS_AS(moment_gram(indices, J, n + 1, p), std::invalid_argument);
}
