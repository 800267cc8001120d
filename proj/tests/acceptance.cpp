// Acceptance gate: one pass/fail line per criterion, nonzero exit when a
// required criterion fails. Each block is self-contained and seeded, so
// the whole binary is deterministic.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fedglm/glm.hpp"
#include "fedglm/glmm.hpp"
#include "fedglm/kernels.hpp"
#include "fedglm/lm.hpp"
#include "fedglm/moments.hpp"
#include "fedglm/multi_index.hpp"
#include "fedglm/pipeline.hpp"
#include "fedglm/pseudogen.hpp"
#include "fedglm/sim.hpp"
#include "fedglm/summary_io.hpp"

using namespace fedglm;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %d: %s (%.1fs)\n", pass ? "PASS" : "FAIL",
                criterion, detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// ---------------------------------------------------------------- 1 ----
// Gaussian exactness: matching moments up to order 2 already determines a
// gaussian mixed fit, so a K=4 pseudo corpus must reproduce it.
void criterion_gaussian_exactness() {
    auto t0 = clk::now();
    const int m = 10, n = 100;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Vector beta = (Vector(4) << 1.0, 0.5, -0.3, 0.2).finished();

    Matrix X(m * n, 4);
    Vector y(m * n);
    std::vector<int> groups(m * n);
    for (int g = 0; g < m; ++g) {
        const double u = 0.5 * normal(rng);
        for (int i = 0; i < n; ++i) {
            const int row = g * n + i;
            X(row, 0) = 1.0;
            for (int j = 1; j < 4; ++j) X(row, j) = normal(rng);
            y[row] = X.row(row).dot(beta) + u + normal(rng);
            groups[row] = g;
        }
    }

    MixedModelSpec spec{make_family(Family::gaussian), X, groups};
    MixedFitResult actual = fit_lmm(spec, y);

    // Per-group summaries of (y, x1, x2, x3), K=4 pseudo-data, refit.
    Matrix pseudo_X(m * n, 4);
    Vector pseudo_y(m * n);
    for (int g = 0; g < m; ++g) {
        Matrix data(n, 4);
        data.col(0) = y.segment(g * n, n);
        data.middleCols(1, 3) = X.block(g * n, 1, n, 3);
        SolverOptions opts;
        opts.seed = 7 + g;
        PseudoDataset pd = generate_pseudo_data(summarize_subgroup(data, 4), opts);
        pseudo_y.segment(g * n, n) = pd.values.col(0);
        pseudo_X.block(g * n, 0, n, 1).setOnes();
        pseudo_X.block(g * n, 1, n, 3) = pd.values.middleCols(1, 3);
    }
    MixedModelSpec ps_spec{make_family(Family::gaussian), pseudo_X, groups};
    MixedFitResult ps = fit_lmm(ps_spec, pseudo_y);

    double worst = std::abs(actual.sigma_u - ps.sigma_u);
    worst = std::max(worst, std::abs(actual.residual_sigma - ps.residual_sigma));
    for (int j = 0; j < 4; ++j)
        worst = std::max(worst, std::abs(actual.beta[j] - ps.beta[j]));

    const double sec = std::chrono::duration<double>(clk::now() - t0).count();
    report(1, worst <= 1e-4 && sec < 120.0,
           "gaussian exactness, max |actual - pseudo| = " + fmt(worst) +
               " (tol 1e-4)",
           sec);
}

// ---------------------------------------------------------------- 2 ----
void criterion_poisson_near_identity() {
    auto t0 = clk::now();
    SimSetting setting = SimSetting::preset(30, 100);
    setting.k_values = {4};
    setting.nuisance = false;

    SolverOptions opts;
    opts.max_iterations = 300;
    opts.stall_window = 60;
    opts.max_restarts = 8;
    opts.acceptable_residual = 5e-3;
    opts.seed = 17;

    ReplicateResult rep = run_replicate(setting, 1, opts, false);
    const double sec = std::chrono::duration<double>(clk::now() - t0).count();
    if (!rep.ok) {
        report(2, false, "poisson near-identity: replicate failed: " + rep.error,
               sec);
        return;
    }
    const FitRecord& ps = rep.pseudo.back().second;
    double worst_beta = 0.0;
    for (int j = 0; j < rep.actual.beta.size(); ++j)
        worst_beta =
            std::max(worst_beta, std::abs(rep.actual.beta[j] - ps.beta[j]));
    const double sigma_diff = std::abs(rep.actual.sigma_u - ps.sigma_u);
    report(2, worst_beta <= 0.01 && sigma_diff <= 0.02 && sec < 600.0,
           "poisson near-identity, max |beta diff| = " + fmt(worst_beta) +
               " (tol 0.01), |sigma_u diff| = " + fmt(sigma_diff) +
               " (tol 0.02)",
           sec);
}

// ---------------------------------------------------------------- 3 ----
void criterion_moment_fidelity() {
    auto t0 = clk::now();
    const int n = 250, p = 5;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.3);

    double worst = 0.0;
    bool seeds_differ = true;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix data(n, p);
        for (int i = 0; i < n; ++i) {
            data(i, 0) = normal(rng);
            data(i, 1) = 0.6 * data(i, 0) + 0.8 * normal(rng);
            data(i, 2) = std::exp(0.5 * normal(rng));
            data(i, 3) = coin(rng) ? 1.0 : 0.0;
            data(i, 4) = normal(rng) + data(i, 3);
        }
        SubgroupSummary summary = summarize_subgroup(data, 4);
        SolverOptions opts;
        opts.seed = 1000 + trial;
        PseudoDataset a = generate_pseudo_data(summary, opts);
        worst = std::max(worst, a.achieved_max_residual);
        if (trial == 0) {
            opts.seed = 5000;
            PseudoDataset b = generate_pseudo_data(summary, opts);
            worst = std::max(worst, b.achieved_max_residual);
            seeds_differ = (a.values - b.values).norm() > 1e-3;
        }
    }
    const double sec = std::chrono::duration<double>(clk::now() - t0).count();
    report(3, worst <= 1e-6 && seeds_differ && sec < 300.0,
           "moment fidelity over 20 subgroups, max residual = " + fmt(worst) +
               " (tol 1e-6), seeds differ = " +
               (seeds_differ ? "yes" : "no"),
           sec);
}

// ---------------------------------------------------------------- 4 ----
// Exact binomial acceptance band: the observed covered count must not be
// in either 2.5% tail of Bin(R, 0.95).
bool within_binomial_band(int covered, int trials, double prob) {
    std::vector<double> pmf(trials + 1);
    double logc = 0.0;
    for (int k = 0; k <= trials; ++k) {
        if (k > 0) logc += std::log(double(trials - k + 1)) - std::log(double(k));
        pmf[k] = std::exp(logc + k * std::log(prob) +
                          (trials - k) * std::log1p(-prob));
    }
    double lower = 0.0, upper = 0.0;
    for (int k = 0; k <= covered; ++k) lower += pmf[k];
    for (int k = covered; k <= trials; ++k) upper += pmf[k];
    return lower > 0.025 && upper > 0.025;
}

void criterion_simulation_study() {
    auto t0 = clk::now();
    SimSetting setting = SimSetting::preset(30, 100);
    setting.k_values = {2, 4};
    setting.reps = 50;

    // Study profile: the scaled residual tolerance stops each subgroup
    // once the relative moment error is statistically negligible; the
    // acceptable band keeps rare stubborn subgroups from failing a whole
    // replicate.
    SolverOptions opts;
    opts.max_iterations = 120;
    opts.stall_window = 30;
    opts.max_restarts = 8;
    opts.residual_tolerance = 1e-3;
    opts.acceptable_residual = 2e-2;
    opts.seed = 5;

    std::vector<ReplicateResult> results;
    for (int r = 0; r < setting.reps; ++r)
        results.push_back(run_replicate(setting, r, opts, true));
    SimulationReport rep = aggregate_report(setting, results);

    const int ok = rep.successful_replicates;
    bool k4_band = ok > 0;
    double k2_min_cover = 1.0;
    std::string k4_detail;
    for (const auto& cell : rep.coefficients) {
        if (cell.data_type == "ps4" && cell.coefficient != "sigma_u") {
            const int covered =
                static_cast<int>(std::lround(cell.coverage * ok));
            if (!within_binomial_band(covered, ok, 0.95)) {
                k4_band = false;
                k4_detail += " " + cell.coefficient + "=" + fmt(cell.coverage);
            }
        } else if (cell.data_type == "ps2" &&
                   cell.coefficient != "sigma_u") {
            k2_min_cover = std::min(k2_min_cover, cell.coverage);
        }
    }
    double same_k4 = 0.0;
    for (const auto& cell : rep.selection)
        if (cell.data_type == "ps4") same_k4 = cell.prop_same_as_actual;

    const double sec = std::chrono::duration<double>(clk::now() - t0).count();
    const bool pass = ok >= 45 && k4_band && k2_min_cover < 0.80 &&
                      same_k4 >= 0.90 && sec < 7200.0;
    report(4, pass,
           "simulation study R=50: ok=" + std::to_string(ok) +
               ", K=4 coverage in band = " + (k4_band ? "yes" : "no") +
               (k4_detail.empty() ? "" : " (out:" + k4_detail + ")") +
               ", K=2 min coverage = " + fmt(k2_min_cover) +
               " (< 0.80), selection agreement = " + fmt(same_k4) +
               " (>= 0.90)",
           sec);
}

// ---------------------------------------------------------------- 5 ----
// Independent full-likelihood Newton fits as the classical oracle.
Vector newton_glm(const Vector& y, const Matrix& X, bool poisson) {
    Vector beta = Vector::Zero(X.cols());
    for (int it = 0; it < 100; ++it) {
        Vector eta = X * beta;
        Vector mu(eta.size()), w(eta.size());
        for (int i = 0; i < eta.size(); ++i) {
            if (poisson) {
                mu[i] = std::exp(eta[i]);
                w[i] = mu[i];
            } else {
                mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
                w[i] = mu[i] * (1.0 - mu[i]);
            }
        }
        Vector score = X.transpose() * (y - mu);
        Matrix info = X.transpose() * w.asDiagonal() * X;
        Vector step = info.ldlt().solve(score);
        beta += step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-14) break;
    }
    return beta;
}

void criterion_soft_families() {
    auto t0 = clk::now();
    const int n = 500;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix X(n, 4);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = normal(rng);
        X(i, 2) = normal(rng);
        X(i, 3) = normal(rng);
    }
    Vector yb(n), yp(n);
    double log_fact_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double eta = 0.3 + 0.8 * X(i, 1) - 0.5 * X(i, 2) + 0.2 * X(i, 3);
        std::bernoulli_distribution bern(1.0 / (1.0 + std::exp(-eta)));
        yb[i] = bern(rng) ? 1.0 : 0.0;
        std::poisson_distribution<int> pois(std::exp(0.5 + 0.4 * X(i, 1)
                                                    - 0.3 * X(i, 2)));
        yp[i] = pois(rng);
        log_fact_sum += std::lgamma(yp[i] + 1.0);
    }

    double worst_coef = 0.0;
    FitResult fb = fit_glm(yb, X, make_family(Family::soft_binomial));
    worst_coef = (fb.coefficients - newton_glm(yb, X, false))
                     .lpNorm<Eigen::Infinity>();
    FitResult fp = fit_glm(yp, X, make_family(Family::soft_poisson));
    worst_coef = std::max(worst_coef, (fp.coefficients - newton_glm(yp, X, true))
                                          .lpNorm<Eigen::Infinity>());

    // Full log-likelihoods for the AIC offset identities.
    auto full_loglik = [&](const Vector& y, const Vector& beta, bool poisson) {
        double ll = 0.0;
        Vector eta = X * beta;
        for (int i = 0; i < n; ++i) {
            if (poisson)
                ll += y[i] * eta[i] - std::exp(eta[i]) - std::lgamma(y[i] + 1.0);
            else
                ll += y[i] * eta[i] - std::log1p(std::exp(eta[i]));
        }
        return ll;
    };
    const double full_aic_b = -2.0 * full_loglik(yb, fb.coefficients, false) + 2 * 4;
    const double full_aic_p = -2.0 * full_loglik(yp, fp.coefficients, true) + 2 * 4;
    const double binom_gap = std::abs(truncated_aic(fb) - full_aic_b);
    const double pois_gap =
        std::abs(full_aic_p - truncated_aic(fp) - 2.0 * log_fact_sum);

    // Rankings over the 7 non-empty predictor subsets must coincide.
    bool rankings_ok = true;
    std::vector<std::pair<double, double>> aics;  // truncated, full
    for (int mask = 1; mask < 8; ++mask) {
        int cols = 1;
        for (int b = 0; b < 3; ++b) if (mask & (1 << b)) ++cols;
        Matrix D(n, cols);
        D.col(0).setOnes();
        int c = 1;
        for (int b = 0; b < 3; ++b)
            if (mask & (1 << b)) D.col(c++) = X.col(b + 1);
        Vector ysub = yp;
        FitResult fit = fit_glm(ysub, D, make_family(Family::soft_poisson));
        Vector eta = D * fit.coefficients;
        double ll = 0.0;
        for (int i = 0; i < n; ++i)
            ll += ysub[i] * eta[i] - std::exp(eta[i]) - std::lgamma(ysub[i] + 1.0);
        aics.push_back({truncated_aic(fit), -2.0 * ll + 2.0 * cols});
    }
    for (std::size_t a = 0; a < aics.size(); ++a)
        for (std::size_t b = 0; b < aics.size(); ++b)
            if ((aics[a].first < aics[b].first) !=
                (aics[a].second < aics[b].second))
                rankings_ok = false;

    const double sec = std::chrono::duration<double>(clk::now() - t0).count();
    report(5,
           worst_coef <= 1e-8 && binom_gap <= 1e-8 && pois_gap <= 1e-8 &&
               rankings_ok && sec < 60.0,
           "soft families: max coefficient gap = " + fmt(worst_coef) +
               " (tol 1e-8), AIC offsets (binomial " + fmt(binom_gap) +
               ", poisson " + fmt(pois_gap) + "), rankings coincide = " +
               (rankings_ok ? "yes" : "no"),
           sec);
}

// ---------------------------------------------------------------- 6 ----
void criterion_numerical_correctness() {
    auto t0 = clk::now();
    bool pass = true;
    std::string detail;

    // (a) analytic moment Jacobian vs central differences, 50 problems
    std::mt19937_64 rng(123);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst_rel = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 5);
        const int p = 2 + static_cast<int>(rng() % 3);
        Matrix z(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) z(i, j) = normal(rng);
        const auto indices = enumerate_multi_indices(p, 4);
        const int nu = static_cast<int>(indices.size());
        PowerTable tab = PowerTable::build(z, 4);
        Matrix J(nu, n * p);
        moment_jacobian_serial(tab, indices, J);
        const double scale = J.cwiseAbs().maxCoeff();

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
                    worst_rel = std::max(
                        worst_rel, std::abs(J(t, j * n + i) - fd) / scale);
                }
            }
        }
        tab.rebuild(z);
    }
    if (worst_rel > 1e-6) pass = false;
    detail += "jacobian FD rel err = " + fmt(worst_rel) + " (tol 1e-6)";

    // (b) GLMM outer gradient vs central differences
    {
        const int m = 6, n_per = 25;
        Matrix X(m * n_per, 2);
        Vector y(m * n_per);
        std::vector<int> groups(m * n_per);
        for (int g = 0; g < m; ++g) {
            const double u = 0.4 * normal(rng);
            for (int i = 0; i < n_per; ++i) {
                const int row = g * n_per + i;
                X(row, 0) = 1.0;
                X(row, 1) = normal(rng);
                std::poisson_distribution<int> pois(
                    std::exp(0.8 + 0.3 * X(row, 1) + u));
                y[row] = pois(rng);
                groups[row] = g;
            }
        }
        MixedModelSpec spec{make_family(Family::soft_poisson), X, groups};
        Vector params(3);
        params << 0.7, 0.25, std::log(0.5);
        auto [value, grad] = glmm_objective(spec, y, params, 1);
        (void)value;
        double worst_g = 0.0;
        const double h = 1e-6;
        for (int j = 0; j < 3; ++j) {
            Vector pp = params, pm = params;
            pp[j] += h;
            pm[j] -= h;
            const double fd = (glmm_objective(spec, y, pp, 1).first -
                               glmm_objective(spec, y, pm, 1).first) /
                              (2 * h);
            worst_g = std::max(worst_g,
                               std::abs(grad[j] - fd) / (1.0 + std::abs(fd)));
        }
        if (worst_g > 1e-5) pass = false;
        detail += ", glmm gradient FD err = " + fmt(worst_g) + " (tol 1e-5)";
    }

    // (c) the three solver examples
    {
        Matrix A(3, 3);
        A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
        Vector b(3);
        b << 1, -2, 3;
        const Vector truth = A.fullPivLu().solve(b);
        LMResult lin = levenberg_marquardt(
            [&](const Vector& x) { return Vector(A * x - b); },
            [&](const Vector&) { return A; }, Vector::Zero(3));
        const bool lin_ok = lin.converged && lin.iterations <= 5 &&
                            (lin.x - truth).lpNorm<Eigen::Infinity>() <= 1e-10;

        LMResult rosen = levenberg_marquardt(
            [](const Vector& x) {
                Vector r(2);
                r << 1.0 - x[0], 10.0 * (x[1] - x[0] * x[0]);
                return r;
            },
            [](const Vector& x) {
                Matrix J(2, 2);
                J << -1.0, 0.0, -20.0 * x[0], 10.0;
                return J;
            },
            (Vector(2) << -1.2, 1.0).finished());
        const bool rosen_ok =
            rosen.converged &&
            std::abs(rosen.x[0] - 1.0) <= 1e-8 &&
            std::abs(rosen.x[1] - 1.0) <= 1e-8;

        LMResult under = levenberg_marquardt(
            [](const Vector& x) {
                Vector r(1);
                r << x[0] + x[1] - 1.0;
                return r;
            },
            [](const Vector&) {
                Matrix J(1, 2);
                J << 1.0, 1.0;
                return J;
            },
            Vector::Zero(2));
        const bool under_ok = under.converged;

        if (!(lin_ok && rosen_ok && under_ok)) pass = false;
        detail += std::string(", solver examples ") +
                  (lin_ok && rosen_ok && under_ok ? "ok" : "FAILED");
    }

    const double sec = std::chrono::duration<double>(clk::now() - t0).count();
    report(6, pass && sec < 60.0, detail, sec);
}

// ---------------------------------------------------------------- 7 ----
void criterion_counting_and_format() {
    auto t0 = clk::now();
    bool counts_ok = true;
    for (int p = 1; p <= 10; ++p) {
        const auto count =
            static_cast<std::int64_t>(enumerate_multi_indices(p, 4).size());
        if (count != binomial(p + 4, 4) - 1) counts_ok = false;
        if (p >= 4 && count != moment_count_k4(p)) counts_ok = false;
    }

    // Summary round trip must be byte-identical.
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix data(60, 3);
    for (int i = 0; i < 60; ++i)
        for (int j = 0; j < 3; ++j) data(i, j) = normal(rng);
    ProviderSummary provider;
    provider.provider_id = "acceptance";
    provider.variable_names = {"a", "b", "c"};
    provider.variable_kinds = {VariableKind::numeric, VariableKind::numeric,
                               VariableKind::numeric};
    provider.subgroups.push_back(summarize_subgroup(data, 4));
    const std::string json1 = summary_to_json(provider);
    const std::string json2 = summary_to_json(summary_from_json(json1));
    const bool roundtrip_ok =
        json1 == json2 && validate_summary(summary_from_json(json1)).ok();

    // Byte determinism of the generation stage under a fixed seed.
    SolverOptions opts;
    opts.seed = 404;
    PseudoPool pool1 = pool_pseudo({provider}, opts);
    PseudoPool pool2 = pool_pseudo({provider}, opts);
    const bool deterministic = pool1.values == pool2.values;

    const double sec = std::chrono::duration<double>(clk::now() - t0).count();
    report(7, counts_ok && roundtrip_ok && deterministic && sec < 60.0,
           std::string("counting/format: nu formulas ") +
               (counts_ok ? "ok" : "FAILED") + ", json round trip " +
               (roundtrip_ok ? "byte-identical" : "FAILED") +
               ", generation " +
               (deterministic ? "deterministic" : "NON-DETERMINISTIC"),
           sec);
}

} // namespace

int main() {
    criterion_gaussian_exactness();
    criterion_poisson_near_identity();
    criterion_moment_fidelity();
    criterion_simulation_study();
    criterion_soft_families();
    criterion_numerical_correctness();
    criterion_counting_and_format();
    std::printf(
        "[SKIP] criterion 8: SPARCS reproduction requires the public SPARCS "
        "2022 inpatient CSV; run scripts/reproduce_sparcs.sh <csv> "
        "(not part of CI)\n");
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all required criteria passed\n");
    return 0;
}
