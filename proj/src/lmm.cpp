#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "fedglm/glmm.hpp"
#include "fedglm/grouping.hpp"

namespace fedglm {

namespace internal {

GroupedDesign group_rows(const Matrix& X, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != X.rows())
        throw std::invalid_argument("group labels length != rows(X)");
    GroupedDesign g;
    std::map<int, int> relabel;
    for (int lab : labels) relabel.emplace(lab, 0);
    int next = 0;
    for (auto& [lab, idx] : relabel) {
        idx = next++;
        g.labels.push_back(lab);
    }
    g.m = next;
    g.index.resize(labels.size());
    g.rows.resize(next);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        g.index[i] = relabel[labels[i]];
        g.rows[g.index[i]].push_back(static_cast<int>(i));
    }
    return g;
}

} // namespace internal

namespace {

struct LmmSuffStats {
    // Per group: cross products needed to profile the marginal likelihood
    // at any variance ratio without touching the raw data again.
    std::vector<Matrix> XtX;
    std::vector<Vector> Xty, sx;  // sx = X_i^T 1
    std::vector<double> yty, sy;
    std::vector<int> sizes;
    int n_total = 0;
    int p = 0;
};

// Profile -2 log-likelihood at variance ratio gamma = sigma_u^2 / sigma_e^2,
// plus the profiled beta and sigma_e^2.
struct LmmProfile {
    double neg2ll;
    Vector beta;
    double sigma_e2;
    Matrix xtvx;  // whole-data X^T V^{-1} X at unit sigma_e^2
};

LmmProfile lmm_profile(const LmmSuffStats& s, double gamma) {
    const int p = s.p;
    Matrix xtvx = Matrix::Zero(p, p);
    Vector xtvy = Vector::Zero(p);
    double ytvy = 0.0, logdet = 0.0;
    for (std::size_t i = 0; i < s.sizes.size(); ++i) {
        const double ni = s.sizes[i];
        const double c = gamma / (1.0 + gamma * ni);
        xtvx += s.XtX[i] - c * (s.sx[i] * s.sx[i].transpose());
        xtvy += s.Xty[i] - c * s.sy[i] * s.sx[i];
        ytvy += s.yty[i] - c * s.sy[i] * s.sy[i];
        logdet += std::log1p(gamma * ni);
    }
    LmmProfile out;
    out.xtvx = xtvx;
    out.beta = xtvx.ldlt().solve(xtvy);
    const double q = ytvy - out.beta.dot(xtvy);
    out.sigma_e2 = q / s.n_total;
    out.neg2ll = s.n_total * std::log(2.0 * M_PI * out.sigma_e2) + logdet +
                 s.n_total;
    return out;
}

} // namespace

MixedFitResult fit_lmm(const MixedModelSpec& spec, const Vector& y) {
    if (spec.family.family != Family::gaussian)
        throw std::invalid_argument("fit_lmm: gaussian family required");
    const int n = static_cast<int>(spec.X.rows());
    const int p = static_cast<int>(spec.X.cols());
    if (y.size() != n) throw std::invalid_argument("fit_lmm: rows(X) != len(y)");

    internal::GroupedDesign g = internal::group_rows(spec.X, spec.groups);
    if (g.m < 2)
        throw std::invalid_argument(
            "fit_lmm: at least two groups are required to identify sigma_u");

    LmmSuffStats s;
    s.p = p;
    s.n_total = n;
    for (int i = 0; i < g.m; ++i) {
        const auto& rows = g.rows[i];
        Matrix Xi(rows.size(), p);
        Vector yi(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            Xi.row(r) = spec.X.row(rows[r]);
            yi[r] = y[rows[r]];
        }
        s.XtX.push_back(Xi.transpose() * Xi);
        s.Xty.push_back(Xi.transpose() * yi);
        s.sx.push_back(Xi.colwise().sum());
        s.sy.push_back(yi.sum());
        s.yty.push_back(yi.squaredNorm());
        s.sizes.push_back(static_cast<int>(rows.size()));
    }

    // Golden-section search on theta = log gamma over a wide bracket;
    // the lower end doubles as the sigma_u = 0 boundary.
    const double lo = -18.0, hi = 12.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    double f1 = lmm_profile(s, std::exp(c1)).neg2ll;
    double f2 = lmm_profile(s, std::exp(c2)).neg2ll;
    int iters = 0;
    while (b - a > 1e-11 && iters < 400) {
        if (f1 < f2) {
            b = c2; c2 = c1; f2 = f1;
            c1 = b - gr * (b - a);
            f1 = lmm_profile(s, std::exp(c1)).neg2ll;
        } else {
            a = c1; c1 = c2; f1 = f2;
            c2 = a + gr * (b - a);
            f2 = lmm_profile(s, std::exp(c2)).neg2ll;
        }
        ++iters;
    }
    double theta = 0.5 * (a + b);
    double gamma = std::exp(theta);
    // Interior optimum vs boundary gamma -> 0.
    const double f_int = lmm_profile(s, gamma).neg2ll;
    const double f_zero = lmm_profile(s, 0.0).neg2ll;
    bool boundary = f_zero <= f_int + 1e-10 || theta < lo + 1.0;
    if (boundary) gamma = 0.0;

    LmmProfile prof = lmm_profile(s, gamma);

    MixedFitResult fit;
    fit.beta = prof.beta;
    fit.beta_cov = prof.sigma_e2 * prof.xtvx.inverse();
    fit.beta_se = fit.beta_cov.diagonal().array().sqrt();
    fit.residual_sigma = std::sqrt(prof.sigma_e2);
    fit.sigma_u = std::sqrt(gamma * prof.sigma_e2);
    fit.sigma_u_boundary = boundary;
    fit.loglik = -0.5 * prof.neg2ll;
    fit.n = n;
    fit.m = g.m;
    fit.n_params = p + 2;
    fit.aic = -2.0 * fit.loglik + 2.0 * fit.n_params;
    fit.bic = -2.0 * fit.loglik + std::log(static_cast<double>(n)) * fit.n_params;
    fit.converged = true;
    fit.iterations = iters;
    fit.group_labels = g.labels;

    fit.blups.resize(g.m);
    for (int i = 0; i < g.m; ++i) {
        const double ni = s.sizes[i];
        const double resid_sum = s.sy[i] - s.sx[i].dot(prof.beta);
        fit.blups[i] = gamma * resid_sum / (1.0 + gamma * ni);
    }
    return fit;
}

} // namespace fedglm
