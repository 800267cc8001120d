#include "fedglm/lm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedglm {

LMResult levenberg_marquardt(const ResidualFn& residual_fn,
                             const JacobianFn& jacobian_fn, const Vector& x0,
                             const SolverOptions& opts, const GramFn& gram_fn) {
    Vector x = x0;
    Vector r = residual_fn(x);
    if (!r.allFinite())
        throw std::invalid_argument("levenberg_marquardt: non-finite residuals at x0");

    const auto n_unknowns = x.size();
    double ssd = r.squaredNorm();
    double lambda = opts.initial_damping;

    LMResult result;
    result.max_abs_residual = r.lpNorm<Eigen::Infinity>();
    if (result.max_abs_residual <= opts.residual_tolerance) {
        result.x = x;
        result.ssd = ssd;
        result.converged = true;
        return result;
    }

    double nu = 2.0;  // rejection growth factor, doubled on consecutive rejects
    double stall_best = result.max_abs_residual;
    int stall_iter = 0;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (opts.stall_window > 0 && iter - stall_iter >= opts.stall_window)
            break;  // residual plateaued; give the caller the best so far
        Matrix J = jacobian_fn(x);
        if (J.rows() != r.size() || J.cols() != n_unknowns)
            throw std::invalid_argument("levenberg_marquardt: Jacobian shape mismatch");
        result.iterations = iter + 1;

        const bool dual = J.rows() < J.cols();
        Matrix gram = gram_fn
                          ? gram_fn(J)
                          : (dual ? Matrix(J * J.transpose())
                                  : Matrix(J.transpose() * J));
        Vector g = J.transpose() * r;

        bool accepted = false;
        // Re-solve with larger damping until a step reduces the SSD; the
        // damping update follows the gain ratio (Nielsen's rule), which
        // drops lambda fast once Gauss-Newton steps start paying off.
        for (int tries = 0; tries < 60; ++tries) {
            Matrix damped = gram;
            damped.diagonal().array() += lambda;
            Vector delta;
            if (dual) {
                // (J^T J + lI)^{-1} J^T == J^T (J J^T + lI)^{-1}
                delta = -(J.transpose() * damped.llt().solve(r));
            } else {
                delta = -damped.llt().solve(g);
            }
            Vector x_new = x + delta;
            Vector r_new = residual_fn(x_new);
            const double ssd_new = r_new.allFinite()
                                       ? r_new.squaredNorm()
                                       : std::numeric_limits<double>::infinity();
            const double predicted = delta.dot(lambda * delta - g);
            if (ssd_new < ssd) {
                const double rho =
                    predicted > 0.0 ? (ssd - ssd_new) / predicted : 1.0;
                // Shrink hard on good steps; even a mediocre accepted step
                // lowers the damping so the tail is not stuck linear.
                lambda *= rho > 0.25 ? 0.1 : 0.5;
                nu = 2.0;
                x = std::move(x_new);
                r = std::move(r_new);
                ssd = ssd_new;
                accepted = true;
                const double step = delta.norm();
                result.max_abs_residual = r.lpNorm<Eigen::Infinity>();
                if (result.max_abs_residual < 0.7 * stall_best) {
                    stall_best = result.max_abs_residual;
                    stall_iter = iter;
                }
                if (result.max_abs_residual <= opts.residual_tolerance) {
                    result.x = x;
                    result.ssd = ssd;
                    result.converged = true;
                    return result;
                }
                if (step <= opts.step_tolerance * (x.norm() + opts.step_tolerance))
                    goto done;
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }
        if (!accepted) break;  // damping exhausted
    }

done:
    result.x = x;
    result.ssd = ssd;
    result.max_abs_residual = r.lpNorm<Eigen::Infinity>();
    result.converged = result.max_abs_residual <= opts.residual_tolerance;
    return result;
}

} // namespace fedglm
