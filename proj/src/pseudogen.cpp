#include "fedglm/pseudogen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include "fedglm/kernels.hpp"

namespace fedglm {

MomentResidualProblem MomentResidualProblem::from_summary(
    const SubgroupSummary& summary) {
    MomentResidualProblem problem;
    problem.indices = summary.indices;
    problem.targets = summary.std_moments;
    problem.n = summary.n;
    problem.p = summary.p;
    problem.k_max = summary.k_max;
    return problem;
}

Vector MomentResidualProblem::residuals(const Vector& x) const {
    if (x.size() != static_cast<Eigen::Index>(n) * p)
        throw std::invalid_argument("MomentResidualProblem: x length != n*p");
    if (!x.allFinite())
        throw std::invalid_argument("MomentResidualProblem: non-finite pseudo values");
    Eigen::Map<const Matrix> z(x.data(), n, p);
    PowerTable tab = PowerTable::build(z, k_max);
    Vector r(nu());
    moment_values_omp(tab, indices, r.data());
    r -= targets;
    return r;
}

Matrix MomentResidualProblem::jacobian(const Vector& x) const {
    if (x.size() != static_cast<Eigen::Index>(n) * p)
        throw std::invalid_argument("MomentResidualProblem: x length != n*p");
    Eigen::Map<const Matrix> z(x.data(), n, p);
    PowerTable tab = PowerTable::build(z, k_max);
    Matrix J(nu(), static_cast<Eigen::Index>(n) * p);
    moment_jacobian_omp(tab, indices, J);
    return J;
}

namespace {

// An empirical two-point column (a dummy, say) satisfies
// m4 / c^2 - m3^2 / c^3 = 1 exactly, where m_k are its standardized pure
// moments and c = (n-1)/n. When a column matches this identity the start
// is drawn two-point with the success count recovered from m4; a normal
// start on such a column costs the solver hundreds of extra iterations.
struct ColumnStart {
    bool two_point = false;
    int n_high = 0;      // rows at the high value
    double low = 0.0;
    double high = 0.0;
};

ColumnStart classify_column(const SubgroupSummary& summary, int j) {
    ColumnStart out;
    if (summary.k_max < 4) return out;
    const int n = summary.n;
    const double c = (n - 1.0) / n;
    std::vector<int> r(summary.p, 0);
    r[j] = 3;
    const double m3 = summary.std_moment(MultiIndex{r});
    r[j] = 4;
    const double m4 = summary.std_moment(MultiIndex{r});
    if (std::abs(m4 / (c * c) - m3 * m3 / (c * c * c) - 1.0) > 1e-6) return out;

    const double g = m4 / (c * c) + 3.0;  // = 1 / (pi (1 - pi))
    if (g < 4.0) return out;
    const double root = std::sqrt(std::max(0.0, 1.0 - 4.0 / g));
    double pi = m3 > 0.0 ? (1.0 - root) / 2.0 : (1.0 + root) / 2.0;
    int n_high = static_cast<int>(std::lround(n * pi));
    n_high = std::max(1, std::min(n - 1, n_high));
    pi = static_cast<double>(n_high) / n;
    const double t = std::sqrt(c / (pi * (1.0 - pi)));
    out.two_point = true;
    out.n_high = n_high;
    out.low = -pi * t;
    out.high = (1.0 - pi) * t;
    return out;
}

// Start from a draw that already carries the target order-2 structure:
// multivariate normal rows with the summary's correlation matrix, then
// two-point columns rank-thresholded to their recovered success count.
// Starting columns independently (or two-point columns at random rows)
// leaves the cross-moment residuals large and strands the solver in
// local minima when several mutually exclusive dummies are present.
Vector make_start(const SubgroupSummary& summary, std::uint64_t seed) {
    const int n = summary.n, p = summary.p;
    const double c = (n - 1.0) / n;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix R = Matrix::Identity(p, p);
    std::vector<int> r(p, 0);
    for (int a = 0; a < p; ++a) {
        for (int b = a + 1; b < p; ++b) {
            std::fill(r.begin(), r.end(), 0);
            r[a] = r[b] = 1;
            R(a, b) = R(b, a) = summary.std_moment(MultiIndex{r}) / c;
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(R);
    const Matrix A = eig.eigenvectors() *
                     eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    Matrix W(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) W(i, j) = normal(rng);
    Matrix Z = W * A.transpose();

    for (int j = 0; j < p; ++j) {
        const ColumnStart col = classify_column(summary, j);
        if (col.two_point) {
            std::vector<int> order(n);
            for (int i = 0; i < n; ++i) order[i] = i;
            std::nth_element(order.begin(), order.begin() + col.n_high,
                             order.end(), [&](int a, int b) {
                                 return Z(a, j) > Z(b, j);
                             });
            Vector replaced = Vector::Constant(n, col.low);
            for (int i = 0; i < col.n_high; ++i) replaced[order[i]] = col.high;
            Z.col(j) = replaced;
        } else {
            // center and scale so the order-1 and pure order-2 targets
            // hold exactly at the start
            const double mean = Z.col(j).mean();
            Z.col(j).array() -= mean;
            const double ms = Z.col(j).squaredNorm() / n;
            if (ms > 0.0) Z.col(j) *= std::sqrt(c / ms);
        }
    }

    Vector x(static_cast<Eigen::Index>(n) * p);
    Eigen::Map<Matrix>(x.data(), n, p) = Z;
    return x;
}

} // namespace

PseudoDataset generate_pseudo_data(const SubgroupSummary& summary,
                                   const SolverOptions& opts) {
    MomentResidualProblem problem = MomentResidualProblem::from_summary(summary);
    const Eigen::Index np = static_cast<Eigen::Index>(problem.n) * problem.p;
    if (np <= problem.nu()) {
        std::fprintf(stderr,
                     "warning: n*p = %lld does not exceed the %d moment targets; "
                     "pseudo-data may coincide with a unique solution\n",
                     static_cast<long long>(np), problem.nu());
    }

    // Equilibrate: high-order moments of long-tailed columns can exceed the
    // others by two orders of magnitude, which stalls the solver in a stiff
    // valley. Each residual is scaled by 1/(1+|target|); meeting the scaled
    // tolerance then bounds every raw residual by tol * (1 + |target|).
    const Vector weights =
        (problem.targets.cwiseAbs().array() + 1.0).inverse().matrix();
    auto residual_fn = [&](const Vector& x) -> Vector {
        return problem.residuals(x).cwiseProduct(weights);
    };
    auto jacobian_fn = [&](const Vector& x) -> Matrix {
        return weights.asDiagonal() * problem.jacobian(x);
    };

    // Each Jacobian row is zero outside the column blocks of its active
    // variables, so the dual gram J J^T is formed blockwise instead of by
    // the dense product. Only worthwhile when the dual path is taken.
    GramFn gram_fn;
    if (np > problem.nu())
        gram_fn = [&problem](const Matrix& Jw) {
            return moment_gram(problem.indices, Jw, problem.n, problem.p);
        };

    LMResult best;
    best.max_abs_residual = std::numeric_limits<double>::infinity();
    double best_raw = std::numeric_limits<double>::infinity();
    Vector raw_residuals;
    for (int attempt = 0; attempt <= opts.max_restarts; ++attempt) {
        Vector x0;
        if (attempt == 0) {
            x0 = make_start(summary, opts.seed);
        } else {
            // Warm restart: project two-point columns of the best iterate
            // back onto their exact two values (stalls concentrate on
            // binary columns drifting off their support) and jitter the
            // continuous columns. This escapes the shallow minima in far
            // fewer iterations than a cold start needs to rebuild the
            // moment structure.
            std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ULL * attempt);
            std::normal_distribution<double> jitter(0.0, 0.05 * attempt);
            std::uniform_int_distribution<int> pick(0, problem.n - 1);
            x0 = best.x;
            Eigen::Map<Matrix> Z(x0.data(), problem.n, problem.p);
            for (int j = 0; j < problem.p; ++j) {
                const ColumnStart col = classify_column(summary, j);
                if (col.two_point) {
                    std::vector<int> order(problem.n);
                    for (int i = 0; i < problem.n; ++i) order[i] = i;
                    std::nth_element(order.begin(), order.begin() + col.n_high,
                                     order.end(), [&](int a, int b) {
                                         return Z(a, j) > Z(b, j);
                                     });
                    Vector replaced = Vector::Constant(problem.n, col.low);
                    for (int i = 0; i < col.n_high; ++i)
                        replaced[order[i]] = col.high;
                    // Swap a few high/low rows so the restart explores a
                    // different assignment of the discrete support.
                    for (int swap = 0; swap < attempt; ++swap) {
                        const int a = pick(rng), b = pick(rng);
                        std::swap(replaced[a], replaced[b]);
                    }
                    Z.col(j) = replaced;
                } else {
                    for (int i = 0; i < problem.n; ++i) Z(i, j) += jitter(rng);
                }
            }
        }
        LMResult res =
            levenberg_marquardt(residual_fn, jacobian_fn, x0, opts, gram_fn);
        if (res.max_abs_residual < best.max_abs_residual) {
            best = std::move(res);
            raw_residuals = problem.residuals(best.x);
            best_raw = raw_residuals.lpNorm<Eigen::Infinity>();
        }
        if (best.converged) break;
        // A best-effort iterate inside the acceptable band is good enough;
        // restarts from fresh draws rarely beat it and cost full runs.
        if (opts.acceptable_residual > 0.0 &&
            best_raw <= opts.acceptable_residual)
            break;
    }
    if (!best.converged &&
        !(opts.acceptable_residual > 0.0 && best_raw <= opts.acceptable_residual))
        throw std::runtime_error(
            "generate_pseudo_data: no convergence after restarts; best max "
            "residual " + std::to_string(best_raw));

    PseudoDataset out;
    out.values.resize(problem.n, problem.p);
    Eigen::Map<const Matrix> z(best.x.data(), problem.n, problem.p);
    for (int j = 0; j < problem.p; ++j)
        out.values.col(j) =
            summary.means[j] + std::sqrt(summary.variances[j]) * z.col(j).array();
    out.achieved_max_residual = best_raw;
    out.solver_iterations = best.iterations;
    return out;
}

std::vector<PseudoDataset> generate_provider(const ProviderSummary& summary,
                                             const SolverOptions& opts) {
    const int m = static_cast<int>(summary.subgroups.size());
    std::vector<PseudoDataset> out(m);
    std::vector<std::string> errors(m);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < m; ++k) {
        SolverOptions sub_opts = opts;
        sub_opts.seed = opts.seed ^ (0xd1b54a32d192ed03ULL * (k + 1));
        try {
            out[k] = generate_pseudo_data(summary.subgroups[k], sub_opts);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
        out[k].group_id = summary.provider_id;
        out[k].subgroup_index = k;
    }
    for (int k = 0; k < m; ++k) {
        if (!errors[k].empty())
            throw std::runtime_error("provider " + summary.provider_id +
                                     " subgroup " + std::to_string(k) + ": " +
                                     errors[k]);
    }
    return out;
}

} // namespace fedglm
