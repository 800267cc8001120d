#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "fedglm/glm.hpp"
#include "fedglm/glmm.hpp"
#include "fedglm/grouping.hpp"

namespace fedglm {

namespace {

// log(1 + exp(x)) without overflow
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Conditional log-density derivatives with respect to the linear predictor.
struct EtaDerivs {
    double l, d1, d2, d3;
};

inline EtaDerivs eta_derivs(Family family, double y, double eta, double phi) {
    switch (family) {
        case Family::soft_poisson: {
            const double mu = std::exp(eta);
            return {y * eta - mu, y - mu, -mu, -mu};
        }
        case Family::soft_binomial: {
            const double mu = 1.0 / (1.0 + std::exp(-eta));
            const double v = mu * (1.0 - mu);
            return {y * eta - softplus(eta), y - mu, -v, -v * (1.0 - 2.0 * mu)};
        }
        case Family::gaussian: {
            const double r = y - eta;
            return {-0.5 * r * r / phi - 0.5 * std::log(2.0 * M_PI * phi),
                    r / phi, -1.0 / phi, 0.0};
        }
    }
    return {};
}

struct GroupData {
    Matrix X;
    Vector y;
};

struct ModeState {
    double u = 0.0;       // conditional mode
    double h = 0.0;       // h(u) at the mode
    double h_uu = 0.0;    // curvature at the mode
    double h_uuu = 0.0;
    Vector eta;           // linear predictor at the mode
    bool ok = true;       // false when the curvature check fails
};

class GlmmProblem {
  public:
    GlmmProblem(const MixedModelSpec& spec, const Vector& y, int nagq)
        : family_(spec.family.family), nagq_(nagq),
          grouping_(internal::group_rows(spec.X, spec.groups)) {
        if (nagq < 1 || nagq % 2 == 0)
            throw std::invalid_argument("fit_glmm: nagq must be a positive odd number");
        if (nagq > 25) throw std::invalid_argument("fit_glmm: nagq must be <= 25");
        p_ = static_cast<int>(spec.X.cols());
        n_ = static_cast<int>(spec.X.rows());
        if (y.size() != n_) throw std::invalid_argument("fit_glmm: rows(X) != len(y)");
        groups_.resize(grouping_.m);
        for (int i = 0; i < grouping_.m; ++i) {
            const auto& rows = grouping_.rows[i];
            groups_[i].X.resize(rows.size(), p_);
            groups_[i].y.resize(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                groups_[i].X.row(r) = spec.X.row(rows[r]);
                groups_[i].y[r] = y[rows[r]];
            }
        }
        if (nagq_ > 1) std::tie(gh_nodes_, gh_weights_) = gauss_hermite(nagq_);
    }

    int m() const { return grouping_.m; }
    int p() const { return p_; }
    int n() const { return n_; }
    int n_params() const {
        return p_ + 1 + (family_ == Family::gaussian ? 1 : 0);
    }
    const std::vector<int>& labels() const { return grouping_.labels; }

    // h(u) = sum_j l(y_j, x_j beta + u) - u^2/(2 s2) - 0.5 log(2 pi s2)
    double h_value(const GroupData& g, const Vector& beta, double u, double s2,
                   double phi) const {
        double h = -0.5 * u * u / s2 - 0.5 * std::log(2.0 * M_PI * s2);
        for (Eigen::Index j = 0; j < g.y.size(); ++j)
            h += eta_derivs(family_, g.y[j], g.X.row(j).dot(beta) + u, phi).l;
        return h;
    }

    ModeState find_mode(const GroupData& g, const Vector& beta, double s2,
                        double phi) const {
        ModeState st;
        st.eta.resize(g.y.size());
        double u = 0.0;
        double h = h_value(g, beta, u, s2, phi);
        for (int iter = 0; iter < 100; ++iter) {
            double h_u = -u / s2, h_uu = -1.0 / s2, h_uuu = 0.0;
            for (Eigen::Index j = 0; j < g.y.size(); ++j) {
                const EtaDerivs d =
                    eta_derivs(family_, g.y[j], g.X.row(j).dot(beta) + u, phi);
                h_u += d.d1;
                h_uu += d.d2;
                h_uuu += d.d3;
            }
            st.h_uu = h_uu;
            st.h_uuu = h_uuu;
            if (std::abs(h_u) < 1e-11 * (1.0 + std::abs(h_uu))) break;
            double step = -h_u / h_uu;
            // Safeguarded Newton: halve until h does not decrease.
            bool moved = false;
            for (int half = 0; half < 50; ++half) {
                const double u_try = u + step;
                const double h_try = h_value(g, beta, u_try, s2, phi);
                if (std::isfinite(h_try) && h_try >= h - 1e-12 * (1.0 + std::abs(h))) {
                    u = u_try;
                    h = h_try;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;  // line search at roundoff: mode located
        }
        st.u = u;
        st.h = h;
        for (Eigen::Index j = 0; j < g.y.size(); ++j)
            st.eta[j] = g.X.row(j).dot(beta) + u;
        // Callers run inside OpenMP loops, so failures are flagged rather
        // than thrown here.
        st.ok = st.h_uu < 0.0;
        return st;
    }

    // Marginal log-likelihood contribution of one group.
    double group_loglik(const GroupData& g, const ModeState& st,
                        const Vector& beta, double s2, double phi) const {
        if (nagq_ == 1)
            return st.h + 0.5 * std::log(2.0 * M_PI) -
                   0.5 * std::log(-st.h_uu);
        const double sc = 1.0 / std::sqrt(-st.h_uu);
        double amax = -std::numeric_limits<double>::infinity();
        Vector a(nagq_);
        for (int k = 0; k < nagq_; ++k) {
            const double u = st.u + std::sqrt(2.0) * sc * gh_nodes_[k];
            a[k] = std::log(gh_weights_[k]) + gh_nodes_[k] * gh_nodes_[k] +
                   h_value(g, beta, u, s2, phi);
            amax = std::max(amax, a[k]);
        }
        double acc = 0.0;
        for (int k = 0; k < nagq_; ++k) acc += std::exp(a[k] - amax);
        return std::log(std::sqrt(2.0) * sc) + amax + std::log(acc);
    }

    // Laplace objective and analytic gradient for soft families at
    // params = (beta, log sigma_u). The mode and curvature are treated as
    // implicit functions of the parameters.
    std::pair<double, Vector> value_and_gradient(const Vector& params) const {
        const Vector beta = params.head(p_);
        const double tau = params[p_];
        const double s2 = std::exp(2.0 * tau);
        const double phi = family_ == Family::gaussian
                               ? std::exp(2.0 * params[p_ + 1])
                               : 1.0;

        const bool analytic =
            nagq_ == 1 && family_ != Family::gaussian;
        const int d = n_params();

        std::vector<double> ll(m());
        std::vector<Vector> grads(analytic ? m() : 0);
        bool all_ok = true;
#pragma omp parallel for schedule(dynamic) reduction(&& : all_ok)
        for (int i = 0; i < m(); ++i) {
            const GroupData& g = groups_[i];
            ModeState st = find_mode(g, beta, s2, phi);
            if (!st.ok) {
                all_ok = false;
                continue;
            }
            ll[i] = group_loglik(g, st, beta, s2, phi);
            if (!analytic) continue;

            Vector gr = Vector::Zero(d);
            Vector h_beta = Vector::Zero(p_);
            Vector h_ubeta = Vector::Zero(p_);
            Vector h_uubeta = Vector::Zero(p_);
            for (Eigen::Index j = 0; j < g.y.size(); ++j) {
                const EtaDerivs dv = eta_derivs(family_, g.y[j], st.eta[j], phi);
                h_beta += dv.d1 * g.X.row(j).transpose();
                h_ubeta += dv.d2 * g.X.row(j).transpose();
                h_uubeta += dv.d3 * g.X.row(j).transpose();
            }
            const double inv_huu = 1.0 / st.h_uu;
            // d log L / d beta = h_beta - (h_uu_beta + h_uuu du/dbeta)/(2 h_uu)
            Vector du_dbeta = -inv_huu * h_ubeta;
            gr.head(p_) = h_beta -
                          0.5 * inv_huu * (h_uubeta + st.h_uuu * du_dbeta);
            // tau derivatives: h_tau = u^2/s2 - 1, h_u_tau = 2u/s2,
            // h_uu_tau = 2/s2
            const double h_tau = st.u * st.u / s2 - 1.0;
            const double h_utau = 2.0 * st.u / s2;
            const double h_uutau = 2.0 / s2;
            const double du_dtau = -inv_huu * h_utau;
            gr[p_] = h_tau - 0.5 * inv_huu * (h_uutau + st.h_uuu * du_dtau);
            grads[i] = gr;
        }
        if (!all_ok)
            throw std::runtime_error("fit_glmm: non-concave conditional curvature");

        double total = 0.0;
        for (int i = 0; i < m(); ++i) total += ll[i];
        Vector grad = Vector::Zero(d);
        if (analytic) {
            for (int i = 0; i < m(); ++i) grad += grads[i];
        } else {
            // Central finite differences (AGQ > 1 and the gaussian hook).
            for (int k = 0; k < d; ++k) {
                const double h = 1e-6 * (1.0 + std::abs(params[k]));
                Vector pp = params, pm = params;
                pp[k] += h;
                pm[k] -= h;
                grad[k] = (value(pp) - value(pm)) / (2.0 * h);
            }
        }
        return {total, grad};
    }

    double value(const Vector& params) const {
        const Vector beta = params.head(p_);
        const double s2 = std::exp(2.0 * params[p_]);
        const double phi = family_ == Family::gaussian
                               ? std::exp(2.0 * params[p_ + 1])
                               : 1.0;
        std::vector<double> ll(m());
        bool all_ok = true;
#pragma omp parallel for schedule(dynamic) reduction(&& : all_ok)
        for (int i = 0; i < m(); ++i) {
            ModeState st = find_mode(groups_[i], beta, s2, phi);
            if (!st.ok) {
                all_ok = false;
                continue;
            }
            ll[i] = group_loglik(groups_[i], st, beta, s2, phi);
        }
        if (!all_ok)
            throw std::runtime_error("fit_glmm: non-concave conditional curvature");
        double total = 0.0;
        for (int i = 0; i < m(); ++i) total += ll[i];
        return total;
    }

    Vector blups(const Vector& params) const {
        const Vector beta = params.head(p_);
        const double s2 = std::exp(2.0 * params[p_]);
        const double phi = family_ == Family::gaussian
                               ? std::exp(2.0 * params[p_ + 1])
                               : 1.0;
        Vector out(m());
        for (int i = 0; i < m(); ++i)
            out[i] = find_mode(groups_[i], beta, s2, phi).u;
        return out;
    }

  private:
    Family family_;
    int nagq_;
    int p_ = 0, n_ = 0;
    internal::GroupedDesign grouping_;
    std::vector<GroupData> groups_;
    Vector gh_nodes_, gh_weights_;
};

// Minimal BFGS with backtracking line search, minimizing f.
struct BfgsResult {
    Vector x;
    double f;
    Vector grad;
    int iterations;
    bool converged;
};

template <typename F>
BfgsResult bfgs_minimize(const F& fn, const Vector& x0, int max_iter = 500) {
    const int d = static_cast<int>(x0.size());
    Vector x = x0;
    auto [f, g] = fn(x);
    Matrix H = Matrix::Identity(d, d);
    BfgsResult res{x, f, g, 0, false};
    for (int iter = 0; iter < max_iter; ++iter) {
        if (g.cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + std::abs(f))) {
            res.converged = true;
            break;
        }
        Vector dir = -H * g;
        if (dir.dot(g) >= 0.0) dir = -g;  // reset on loss of descent

        double step = 1.0;
        double f_new = f;
        Vector x_new, g_new;
        bool ok = false;
        for (int ls = 0; ls < 50; ++ls) {
            x_new = x + step * dir;
            auto [ft, gt] = fn(x_new);
            if (std::isfinite(ft) && ft <= f + 1e-4 * step * dir.dot(g)) {
                f_new = ft;
                g_new = gt;
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) break;

        Vector s = x_new - x;
        Vector yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            const double rho = 1.0 / sy;
            Matrix I = Matrix::Identity(d, d);
            H = (I - rho * s * yv.transpose()) * H *
                    (I - rho * yv * s.transpose()) +
                rho * s * s.transpose();
        }
        x = x_new;
        f = f_new;
        g = g_new;
        res.iterations = iter + 1;
        if (s.norm() <= 1e-12 * (1.0 + x.norm())) {
            res.converged = true;
            break;
        }
    }
    res.x = x;
    res.f = f;
    res.grad = g;
    res.converged = res.converged ||
                    g.cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + std::abs(f));
    return res;
}

Matrix fd_hessian(const std::function<double(const Vector&)>& fn,
                  const Vector& x) {
    const int d = static_cast<int>(x.size());
    const double f0 = fn(x);
    Vector h(d);
    for (int i = 0; i < d; ++i) h[i] = 1e-4 * (1.0 + std::abs(x[i]));
    Matrix H(d, d);
    for (int i = 0; i < d; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h[i];
        xm[i] -= h[i];
        H(i, i) = (fn(xp) + fn(xm) - 2.0 * f0) / (h[i] * h[i]);
        for (int j = i + 1; j < d; ++j) {
            Vector xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h[i]; xpp[j] += h[j];
            xpm[i] += h[i]; xpm[j] -= h[j];
            xmp[i] -= h[i]; xmp[j] += h[j];
            xmm[i] -= h[i]; xmm[j] -= h[j];
            H(i, j) = H(j, i) =
                (fn(xpp) - fn(xpm) - fn(xmp) + fn(xmm)) / (4.0 * h[i] * h[j]);
        }
    }
    return H;
}

} // namespace

std::pair<double, Vector> glmm_objective(const MixedModelSpec& spec,
                                         const Vector& y, const Vector& params,
                                         int nagq) {
    GlmmProblem problem(spec, y, nagq);
    return problem.value_and_gradient(params);
}

MixedFitResult fit_glmm(const MixedModelSpec& spec, const Vector& y, int nagq) {
    GlmmProblem problem(spec, y, nagq);
    if (problem.m() < 2)
        throw std::invalid_argument(
            "fit_glmm: at least two groups are required to identify sigma_u");
    const int p = problem.p();
    const int d = problem.n_params();

    // Start from the fixed-effects GLM fit.
    FitResult glm0 = fit_glm(y, spec.X, spec.family);
    Vector params(d);
    params.head(p) = glm0.coefficients;
    params[p] = std::log(0.5);
    if (spec.family.family == Family::gaussian)
        params[p + 1] = 0.5 * std::log(std::max(glm0.dispersion, 1e-8));

    auto objective = [&](const Vector& th) {
        auto [v, g] = problem.value_and_gradient(th);
        return std::make_pair(-v, Vector(-g));
    };
    BfgsResult opt = bfgs_minimize(objective, params);

    MixedFitResult fit;
    fit.beta = opt.x.head(p);
    fit.sigma_u = std::exp(opt.x[p]);
    fit.sigma_u_boundary = opt.x[p] < -8.0;
    if (spec.family.family == Family::gaussian)
        fit.residual_sigma = std::exp(opt.x[p + 1]);
    fit.loglik = -opt.f;
    fit.n = problem.n();
    fit.m = problem.m();
    fit.nagq = nagq;
    fit.converged = opt.converged;
    fit.iterations = opt.iterations;
    fit.group_labels = problem.labels();
    fit.blups = problem.blups(opt.x);
    fit.n_params = d;
    fit.aic = -2.0 * fit.loglik + 2.0 * d;
    fit.bic = -2.0 * fit.loglik + std::log(static_cast<double>(fit.n)) * d;

    // Wald covariance from the numeric Hessian of the negative loglik.
    auto neg_ll = [&](const Vector& th) { return -problem.value(th); };
    Matrix H = fd_hessian(neg_ll, opt.x);
    Matrix cov = H.ldlt().solve(Matrix::Identity(d, d));
    fit.beta_cov = cov.topLeftCorner(p, p);
    fit.beta_se = fit.beta_cov.diagonal().array().max(0.0).sqrt();
    return fit;
}

namespace {

// Acklam's rational approximation of the standard normal quantile,
// refined with one Halley step.
double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("normal_quantile: q must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (q < plow) {
        const double u = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((dd[0] * u + dd[1]) * u + dd[2]) * u + dd[3]) * u + 1.0);
    } else if (q <= 1.0 - plow) {
        const double u = q - 0.5, t = u * u;
        x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
            (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
    } else {
        const double u = std::sqrt(-2.0 * std::log(1.0 - q));
        x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((dd[0] * u + dd[1]) * u + dd[2]) * u + dd[3]) * u + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - q;
    const double v = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - v / (1.0 + 0.5 * x * v);
    return x;
}

} // namespace

std::vector<WaldInterval> wald_ci(const MixedFitResult& fit, double level) {
    if (level <= 0.0 || level >= 1.0)
        throw std::invalid_argument("wald_ci: level must be in (0,1)");
    const double z = normal_quantile(0.5 * (1.0 + level));
    std::vector<WaldInterval> out;
    for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
        const double half = z * fit.beta_se[k];
        out.push_back({fit.beta[k] - half, fit.beta[k] + half});
    }
    return out;
}

Vector predict(const MixedFitResult& fit, const FamilySpec& family,
               const Matrix& X_new, const std::vector<int>& groups) {
    if (X_new.cols() != fit.beta.size())
        throw std::invalid_argument("predict: design width != fitted coefficients");
    if (static_cast<int>(groups.size()) != X_new.rows())
        throw std::invalid_argument("predict: group labels length != rows");
    Vector out(X_new.rows());
    for (Eigen::Index i = 0; i < X_new.rows(); ++i) {
        double u = 0.0;
        if (groups[i] >= 0) {
            auto it = std::find(fit.group_labels.begin(), fit.group_labels.end(),
                                groups[i]);
            if (it == fit.group_labels.end())
                throw std::invalid_argument(
                    "predict: unknown group label " + std::to_string(groups[i]) +
                    "; mark new groups with a negative label");
            u = fit.blups[it - fit.group_labels.begin()];
        }
        out[i] = family.inv_link(X_new.row(i).dot(fit.beta) + u);
    }
    return out;
}

std::pair<Vector, Vector> gauss_hermite(int n_nodes) {
    if (n_nodes < 1) throw std::invalid_argument("gauss_hermite: need >= 1 node");
    if (n_nodes == 1)
        return {Vector::Zero(1), Vector::Constant(1, std::sqrt(M_PI))};
    // Golub-Welsch on the Hermite three-term recurrence.
    Matrix T = Matrix::Zero(n_nodes, n_nodes);
    for (int i = 1; i < n_nodes; ++i) {
        const double off = std::sqrt(i / 2.0);
        T(i, i - 1) = T(i - 1, i) = off;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(T);
    Vector nodes = es.eigenvalues();
    Vector weights(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        const double v = es.eigenvectors()(0, i);
        weights[i] = std::sqrt(M_PI) * v * v;
    }
    return {nodes, weights};
}

} // namespace fedglm
