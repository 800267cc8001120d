#pragma once

#include "fedglm/family.hpp"
#include "fedglm/types.hpp"

namespace fedglm {

struct FitResult {
    Vector coefficients;
    Vector standard_errors;
    Matrix covariance;
    double loglik_fitted = 0.0;  // saturated / response-only terms excluded
    double aic = 0.0;            // truncated
    double bic = 0.0;
    double deviance = 0.0;
    double dispersion = 1.0;     // gaussian: deviance / (n - p)
    bool converged = false;
    int iterations = 0;
    int n = 0;
    int p_model = 0;
};

/// IRLS with step-halving on deviance increase. Converges when the
/// relative deviance change drops below 1e-10 (50 iterations max).
FitResult fit_glm(const Vector& y, const Matrix& X, const FamilySpec& family);

/// AIC with the response-only constants omitted: -2 loglik_fitted + 2k,
/// where k counts the coefficients plus the gaussian dispersion.
double truncated_aic(const FitResult& fit);
double truncated_bic(const FitResult& fit);

} // namespace fedglm
