#include "fedglm/glm.hpp"

#include <cmath>
#include <stdexcept>

namespace fedglm {

namespace {

double model_deviance(const FamilySpec& family, const Vector& y,
                      const Vector& mu) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        dev += family.deviance_contribution(y[i], mu[i]);
    return dev;
}

} // namespace

FitResult fit_glm(const Vector& y, const Matrix& X, const FamilySpec& family) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (y.size() != n) throw std::invalid_argument("fit_glm: rows(X) != len(y)");

    FitResult fit;
    fit.n = n;
    fit.p_model = p;

    Vector eta(n), mu(n);
    for (int i = 0; i < n; ++i) {
        mu[i] = family.mu_init(y[i]);
        eta[i] = family.link(mu[i]);
    }
    double deviance = model_deviance(family, y, mu);

    Vector beta = Vector::Zero(p);
    Vector w(n), z(n);
    const int max_iter = 50;
    for (int iter = 0; iter < max_iter; ++iter) {
        for (int i = 0; i < n; ++i) {
            const double d = family.mu_eta(eta[i]);
            const double v = family.variance(mu[i]);
            if (!(d > 0.0) || !(v > 0.0) || !std::isfinite(d) || !std::isfinite(v))
                throw std::runtime_error("fit_glm: IRLS working weights diverged");
            w[i] = d * d / v;
            z[i] = eta[i] + (y[i] - mu[i]) / d;
        }
        Matrix Xw = w.asDiagonal() * X;
        Matrix XtWX = X.transpose() * Xw;
        Eigen::LDLT<Matrix> ldlt(XtWX);
        if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any())
            throw std::runtime_error("fit_glm: design matrix is rank deficient");
        Vector beta_new = ldlt.solve(Xw.transpose() * z);

        // Step-halving toward the previous iterate if the deviance rises.
        Vector step = beta_new - beta;
        double dev_new = 0.0;
        Vector eta_new(n), mu_new(n);
        // Acceptance slack scales with the deviance so roundoff noise near
        // convergence cannot defeat every halving.
        const double slack = 1e-11 * (std::abs(deviance) + 1.0);
        bool ok = false;
        for (int half = 0; half <= 30; ++half) {
            Vector beta_try = beta + step;
            eta_new = X * beta_try;
            for (int i = 0; i < n; ++i) mu_new[i] = family.inv_link(eta_new[i]);
            dev_new = model_deviance(family, y, mu_new);
            if (std::isfinite(dev_new) && (iter == 0 || dev_new <= deviance + slack)) {
                beta = beta_try;
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) throw std::runtime_error("fit_glm: IRLS step-halving failed");
        eta = eta_new;
        mu = mu_new;
        fit.iterations = iter + 1;

        const double rel = std::abs(deviance - dev_new) /
                           (std::abs(dev_new) + 0.1);
        deviance = dev_new;
        if (iter > 0 && rel < 1e-10) {
            fit.converged = true;
            break;
        }
    }

    fit.deviance = deviance;
    fit.coefficients = beta;

    double phi = 1.0;
    if (family.estimates_dispersion()) phi = deviance / std::max(n - p, 1);
    fit.dispersion = phi;

    for (int i = 0; i < n; ++i) {
        const double d = family.mu_eta(eta[i]);
        w[i] = d * d / family.variance(mu[i]);
    }
    Matrix XtWX = X.transpose() * (w.asDiagonal() * X);
    fit.covariance = phi * XtWX.inverse();
    fit.standard_errors = fit.covariance.diagonal().array().sqrt();

    int k = p;
    switch (family.family) {
        case Family::gaussian: {
            const double sigma2_ml = deviance / n;
            fit.loglik_fitted =
                -0.5 * n * (std::log(2.0 * M_PI * sigma2_ml) + 1.0);
            k = p + 1;  // dispersion counted as a parameter
            break;
        }
        case Family::soft_binomial:
        case Family::soft_poisson:
            fit.loglik_fitted = -0.5 * deviance;
            break;
    }
    fit.aic = -2.0 * fit.loglik_fitted + 2.0 * k;
    fit.bic = -2.0 * fit.loglik_fitted + std::log(static_cast<double>(n)) * k;
    return fit;
}

double truncated_aic(const FitResult& fit) { return fit.aic; }
double truncated_bic(const FitResult& fit) { return fit.bic; }

} // namespace fedglm
