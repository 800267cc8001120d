#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fedglm/family.hpp"
#include "fedglm/types.hpp"

namespace fedglm {

/// Random-intercept model: fixed design X, one intercept per group.
/// Group labels are relabeled internally to a contiguous 0..m-1 range.
struct MixedModelSpec {
    FamilySpec family;
    Matrix X;                         // n x p fixed design
    std::vector<int> groups;          // group index per row, any labels
};

struct MixedFitResult {
    Vector beta;
    Vector beta_se;
    Matrix beta_cov;
    double sigma_u = 0.0;
    double residual_sigma = 0.0;  // gaussian only
    Vector blups;                  // per-group conditional modes
    std::vector<int> group_labels; // original label for each blup slot
    double loglik = 0.0;           // Laplace/AGQ approximation
    double aic = 0.0;              // truncated where applicable
    double bic = 0.0;
    int n = 0;
    int m = 0;
    int n_params = 0;
    int nagq = 1;
    bool converged = false;
    int iterations = 0;
    bool sigma_u_boundary = false;
};

/// Linear mixed model by ML: marginal Gaussian likelihood profiled over
/// beta and the residual variance, one-dimensional outer search over the
/// variance ratio sigma_u^2 / sigma_e^2.
MixedFitResult fit_lmm(const MixedModelSpec& spec, const Vector& y);

/// Laplace (nagq = 1) or adaptive Gauss-Hermite approximation of the
/// marginal likelihood, BFGS over (beta, log sigma_u). Also accepts a
/// gaussian family (with a log residual-sigma parameter) as a test hook.
MixedFitResult fit_glmm(const MixedModelSpec& spec, const Vector& y,
                        int nagq = 1);

/// Approximate marginal log-likelihood and its analytic gradient at
/// params = (beta, log sigma_u), soft families only. Exposed for the
/// finite-difference gradient check and used by the optimizer.
std::pair<double, Vector> glmm_objective(const MixedModelSpec& spec,
                                         const Vector& y, const Vector& params,
                                         int nagq = 1);

struct WaldInterval {
    double lower;
    double upper;
};

std::vector<WaldInterval> wald_ci(const MixedFitResult& fit,
                                  double level = 0.95);

/// Inverse-link of X beta + BLUP for known groups; a negative group label
/// marks a new group (random effect set to zero).
Vector predict(const MixedFitResult& fit, const FamilySpec& family,
               const Matrix& X_new, const std::vector<int>& groups);

/// Gauss-Hermite nodes/weights for weight function exp(-t^2).
std::pair<Vector, Vector> gauss_hermite(int n_nodes);

} // namespace fedglm
