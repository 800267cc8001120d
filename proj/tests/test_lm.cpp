#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedglm/lm.hpp"

using namespace fedglm;

TEST_CASE("linear least squares converges in one accepted step region") {
    // r(x) = A x - b with A square and well conditioned.
    Matrix A(3, 3);
    A << 4, 1, 0, 1, 3, 1, 0, 1, 5;
    Vector b(3);
    b << 1, 2, 3;
    const Vector expected = A.colPivHouseholderQr().solve(b);

    const auto result = levenberg_marquardt(
        [&](const Vector& x) -> Vector { return A * x - b; },
        [&](const Vector&) -> Matrix { return A; }, Vector::Zero(3));

    CHECK(result.converged);
    CHECK((result.x - expected).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(result.max_abs_residual < 1e-8);
}

TEST_CASE("Rosenbrock residual form reaches the global minimum") {
    // r = (10 (x2 - x1^2), 1 - x1), minimum at (1, 1).
    const auto residual = [](const Vector& x) -> Vector {
        Vector r(2);
        r << 10 * (x[1] - x[0] * x[0]), 1 - x[0];
        return r;
    };
    const auto jacobian = [](const Vector& x) -> Matrix {
        Matrix J(2, 2);
        J << -20 * x[0], 10, -1, 0;
        return J;
    };
    Vector x0(2);
    x0 << -1.2, 1.0;
    const auto result = levenberg_marquardt(residual, jacobian, x0);
    CHECK(result.converged);
    CHECK(result.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(result.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("underdetermined systems use the dual solve and still converge") {
    // 2 residuals, 5 unknowns: r = B x - c has a manifold of solutions.
    Matrix B(2, 5);
    B << 1, 2, 0, -1, 3, 0, 1, 1, 2, -1;
    Vector c(2);
    c << 4, -2;
    Vector x0(5);
    x0 << 0.1, -0.2, 0.3, 0.0, 0.5;
    const auto result = levenberg_marquardt(
        [&](const Vector& x) -> Vector { return B * x - c; },
        [&](const Vector&) -> Matrix { return B; }, x0);
    CHECK(result.converged);
    CHECK((B * result.x - c).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("already-converged start returns immediately") {
    Matrix A = Matrix::Identity(2, 2);
    Vector b(2);
    b << 1.0, 2.0;
    const auto result = levenberg_marquardt(
        [&](const Vector& x) -> Vector { return A * x - b; },
        [&](const Vector&) -> Matrix { return A; }, b);
    CHECK(result.converged);
    CHECK(result.iterations == 0);
    CHECK(result.x == b);
}

TEST_CASE("iteration budget is honored on a non-convergent problem") {
    // Residual bounded away from zero: |r| >= 1 everywhere.
    SolverOptions opts;
    opts.max_iterations = 20;
    const auto result = levenberg_marquardt(
        [](const Vector& x) -> Vector {
            Vector r(1);
            r << x[0] * x[0] + 1.0;
            return r;
        },
        [](const Vector& x) -> Matrix {
            Matrix J(1, 1);
            J << 2 * x[0];
            return J;
        },
        Vector::Ones(1), opts);
    CHECK(!result.converged);
    CHECK(result.iterations <= 20);
    CHECK(result.max_abs_residual >= 1.0);
}

TEST_CASE("deterministic: identical inputs give identical outputs") {
    Matrix B(2, 4);
    B << 1, -1, 2, 0, 3, 1, 0, -2;
    Vector c(2);
    c << 1, 1;
    Vector x0(4);
    x0 << 0.3, 0.1, -0.4, 0.2;
    const auto residual = [&](const Vector& x) -> Vector { return B * x - c; };
    const auto jacobian = [&](const Vector&) -> Matrix { return B; };
    const auto r1 = levenberg_marquardt(residual, jacobian, x0);
    const auto r2 = levenberg_marquardt(residual, jacobian, x0);
    CHECK(r1.x == r2.x);
    CHECK(r1.iterations == r2.iterations);
}
