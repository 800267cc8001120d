#pragma once

#include <cstdint>
#include <functional>

#include "fedglm/types.hpp"

namespace fedglm {

struct SolverOptions {
    int max_iterations = 500;
    double residual_tolerance = 1e-8;  // on max |residual|
    double step_tolerance = 1e-14;
    double initial_damping = 1e-3;
    std::uint64_t seed = 0;
    int max_restarts = 3;
    /// Residual threshold below which a non-converged best iterate is still
    /// returned by the pseudo-data generator instead of throwing. 0 keeps
    /// the strict behavior.
    double acceptable_residual = 0.0;
    /// Stop a run early when the best residual has not improved by at
    /// least 30% over this many iterations (0 disables the check).
    int stall_window = 0;
};

struct LMResult {
    Vector x;
    double max_abs_residual = 0.0;
    double ssd = 0.0;
    int iterations = 0;
    bool converged = false;
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;
/// Optional specialized computation of J J^T (dual) or J^T J (primal);
/// problems with structured Jacobians can beat the dense product.
using GramFn = std::function<Matrix(const Matrix&)>;

/// Levenberg-Marquardt on the damped normal equations
/// (J^T J + lambda I) delta = -J^T r. When the system is underdetermined
/// (fewer residuals than unknowns) the equivalent dual system
/// (J J^T + lambda I) is factorized instead, which keeps the decomposition
/// at nu x nu. The damping update follows the gain ratio; rejected steps
/// reuse the Jacobian. Deterministic given x0 and opts.
LMResult levenberg_marquardt(const ResidualFn& residual_fn,
                             const JacobianFn& jacobian_fn, const Vector& x0,
                             const SolverOptions& opts = {},
                             const GramFn& gram_fn = nullptr);

} // namespace fedglm
