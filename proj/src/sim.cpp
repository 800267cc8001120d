#include "fedglm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

#include "fedglm/glm.hpp"
#include "fedglm/moments.hpp"
#include "fedglm/pseudogen.hpp"

namespace fedglm {

namespace {

constexpr double kX1Mean = 3150.14;
constexpr double kX1Var = 710797.5;
constexpr double kX2Prob = 0.56;
constexpr double kCategoryProbs[5] = {0.095, 0.127, 0.111, 0.387, 0.280};
constexpr int kCorrectModel = 0b00111;  // x1, x2, x3 block

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = seed;
    h ^= a + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

} // namespace

SimSetting SimSetting::preset(int m, int n) {
    SimSetting s;
    s.m = m;
    s.n = n;
    s.beta.resize(7);
    s.beta << 2.29, -0.30, 0.09, -0.96, -0.81, -0.81, -0.79;
    s.sigma_u = 0.48;
    return s;
}

const std::vector<std::string>& true_model_coefficient_names() {
    static const std::vector<std::string> names = {
        "(Intercept)", "x1", "x2", "x3_2", "x3_3", "x3_4", "x3_5"};
    return names;
}

SimDataset simulate_dataset(const SimSetting& setting,
                            std::uint64_t replicate_seed) {
    if (setting.beta.size() != 7)
        throw std::invalid_argument("simulate_dataset: beta must have length 7");
    std::mt19937_64 rng(mix_seed(setting.seed, replicate_seed, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const int total = setting.m * setting.n;
    SimDataset ds;
    ds.y.resize(total);
    ds.X.resize(total, 7);
    ds.groups.resize(total);
    if (setting.nuisance) ds.nuisance.resize(total, 2);

    const double x1_sd = std::sqrt(kX1Var);
    int row = 0;
    for (int g = 0; g < setting.m; ++g) {
        const double u = setting.sigma_u * normal(rng);
        for (int j = 0; j < setting.n; ++j, ++row) {
            const double x1_raw = kX1Mean + x1_sd * normal(rng);
            const double x1 = (x1_raw - kX1Mean) / x1_sd;  // standardized
            const double x2 = unif(rng) < kX2Prob ? 1.0 : 0.0;
            const double v = unif(rng);
            int cat = 0;
            double cum = 0.0;
            for (int c = 0; c < 5; ++c) {
                cum += kCategoryProbs[c];
                if (v < cum) { cat = c; break; }
                cat = 4;
            }
            ds.X(row, 0) = 1.0;
            ds.X(row, 1) = x1;
            ds.X(row, 2) = x2;
            for (int c = 1; c < 5; ++c) ds.X(row, 3 + c - 1) = cat == c ? 1.0 : 0.0;
            ds.groups[row] = g;

            const double eta = ds.X.row(row).dot(setting.beta) + u;
            std::poisson_distribution<long> pois(std::exp(eta));
            ds.y[row] = static_cast<double>(pois(rng));

            if (setting.nuisance) {
                ds.nuisance(row, 0) = normal(rng);
                ds.nuisance(row, 1) = unif(rng) < 0.5 ? 1.0 : 0.0;
            }
        }
    }
    return ds;
}

namespace {

// Column block layout of the moment-matching matrix: response, the six
// non-intercept true-model columns, then any nuisance columns.
Matrix moment_matrix(const SimDataset& ds) {
    const int extra = static_cast<int>(ds.nuisance.cols());
    Matrix data(ds.y.size(), 7 + extra);
    data.col(0) = ds.y;
    data.middleCols(1, 6) = ds.X.rightCols(6);
    if (extra) data.rightCols(extra) = ds.nuisance;
    return data;
}

SubgroupSummary truncate_summary(const SubgroupSummary& full, int k) {
    if (k == full.k_max) return full;
    // Graded order makes lower-K index sets a prefix of the K=4 listing.
    SubgroupSummary out = full;
    out.k_max = k;
    const auto count = enumerate_multi_indices(full.p, k).size();
    out.indices.assign(full.indices.begin(),
                       full.indices.begin() + static_cast<long>(count));
    out.std_moments = full.std_moments.head(static_cast<Eigen::Index>(count));
    return out;
}

struct CandidateDesign {
    Matrix X;
    int mask;
};

// Main-effect candidates over {x1, x2, x3 block, x4, x5}; the dummy block
// enters atomically.
std::vector<CandidateDesign> candidate_designs(const Vector& /*y*/, const Matrix& X,
                                               const Matrix& nuisance) {
    std::vector<CandidateDesign> out;
    for (int mask = 1; mask < 32; ++mask) {
        int cols = 1 + (mask & 1 ? 1 : 0) + (mask & 2 ? 1 : 0) +
                   (mask & 4 ? 4 : 0) + (mask & 8 ? 1 : 0) + (mask & 16 ? 1 : 0);
        Matrix D(X.rows(), cols);
        int c = 0;
        D.col(c++).setOnes();
        if (mask & 1) D.col(c++) = X.col(1);
        if (mask & 2) D.col(c++) = X.col(2);
        if (mask & 4) { D.middleCols(c, 4) = X.middleCols(3, 4); c += 4; }
        if (mask & 8) D.col(c++) = nuisance.col(0);
        if (mask & 16) D.col(c++) = nuisance.col(1);
        out.push_back({std::move(D), mask});
    }
    return out;
}

FitRecord fit_dataset(const Vector& y, const Matrix& X, const Matrix& nuisance,
                      const std::vector<int>& groups, const Matrix& X_pred,
                      const std::vector<int>& groups_pred, bool select_models) {
    MixedModelSpec spec{make_family(Family::soft_poisson), X, groups};
    MixedFitResult fit = fit_glmm(spec, y, 1);

    FitRecord rec;
    rec.beta = fit.beta;
    rec.se = fit.beta_se;
    rec.ci = wald_ci(fit);
    rec.sigma_u = fit.sigma_u;
    rec.predictions = predict(fit, spec.family, X_pred, groups_pred);

    if (select_models && nuisance.cols() == 2) {
        double best = std::numeric_limits<double>::infinity();
        for (auto& cand : candidate_designs(y, X, nuisance)) {
            MixedModelSpec cspec{make_family(Family::soft_poisson), cand.X, groups};
            try {
                MixedFitResult cfit = fit_glmm(cspec, y, 1);
                if (cfit.aic < best) {
                    best = cfit.aic;
                    rec.selected_model = cand.mask;
                }
            } catch (const std::exception&) {
                // A non-converging candidate simply drops out of the race.
            }
        }
    }
    return rec;
}

} // namespace

ReplicateResult run_replicate(const SimSetting& setting, int replicate,
                              const SolverOptions& solver, bool select_models) {
    ReplicateResult result;
    result.replicate = replicate;
    const int k_top = *std::max_element(setting.k_values.begin(),
                                        setting.k_values.end());
    try {
        SimDataset ds;
        std::vector<SubgroupSummary> summaries;
        bool usable = false;
        for (int attempt = 0; attempt <= 3 && !usable; ++attempt) {
            ds = simulate_dataset(setting,
                                  mix_seed(0, static_cast<unsigned>(replicate), attempt));
            summaries.clear();
            try {
                const Matrix data = moment_matrix(ds);
                for (int g = 0; g < setting.m; ++g)
                    summaries.push_back(summarize_subgroup(
                        data.middleRows(g * setting.n, setting.n), k_top));
                usable = true;
            } catch (const std::exception&) {
                // Degenerate subgroup (constant dummy column in some group):
                // regenerate with the next sub-seed.
                result.regenerations = attempt + 1;
            }
        }
        if (!usable)
            throw std::runtime_error("degenerate dataset after 3 regenerations");

        result.actual = fit_dataset(ds.y, ds.X, ds.nuisance, ds.groups, ds.X,
                                    ds.groups, select_models);

        for (int k : setting.k_values) {
            Matrix pseudo(ds.y.size(), moment_matrix(ds).cols());
            for (int g = 0; g < setting.m; ++g) {
                SolverOptions opts = solver;
                opts.seed = mix_seed(solver.seed, static_cast<unsigned>(replicate),
                                     (static_cast<std::uint64_t>(k) << 32) | g);
                PseudoDataset pd =
                    generate_pseudo_data(truncate_summary(summaries[g], k), opts);
                pseudo.middleRows(g * setting.n, setting.n) = pd.values;
            }
            SimDataset ps;
            ps.y = pseudo.col(0);
            ps.X.resize(pseudo.rows(), 7);
            ps.X.col(0).setOnes();
            ps.X.rightCols(6) = pseudo.middleCols(1, 6);
            if (ds.nuisance.cols()) ps.nuisance = pseudo.rightCols(2);
            ps.groups = ds.groups;
            result.pseudo.emplace_back(
                k, fit_dataset(ps.y, ps.X, ps.nuisance, ps.groups, ds.X, ds.groups,
                               select_models));
        }
        result.ok = true;
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

SimulationReport aggregate_report(const SimSetting& setting,
                                  const std::vector<ReplicateResult>& results) {
    SimulationReport report;
    std::vector<const ReplicateResult*> ok;
    for (const auto& r : results) {
        if (r.ok) ok.push_back(&r);
        else ++report.failed_replicates;
    }
    report.successful_replicates = static_cast<int>(ok.size());
    if (ok.empty()) return report;

    const auto& names = true_model_coefficient_names();
    auto accumulate = [&](const std::string& label,
                          const std::function<const FitRecord*(const ReplicateResult&)>&
                              pick) {
        for (int j = 0; j < 7; ++j) {
            double bias = 0.0, cover = 0.0, lo = 0.0, hi = 0.0;
            int count = 0;
            for (const auto* r : ok) {
                const FitRecord* rec = pick(*r);
                if (!rec) continue;
                const double truth = setting.beta[j];
                bias += (rec->beta[j] - truth) / std::abs(truth);
                cover += (rec->ci[j].lower <= truth && truth <= rec->ci[j].upper);
                lo += rec->ci[j].lower;
                hi += rec->ci[j].upper;
                ++count;
            }
            if (!count) continue;
            report.coefficients.push_back({label, names[j], bias / count,
                                           cover / count, lo / count, hi / count});
        }
        // sigma_u bias (no Wald interval reported for it)
        double sbias = 0.0;
        int count = 0;
        for (const auto* r : ok) {
            const FitRecord* rec = pick(*r);
            if (!rec) continue;
            sbias += (rec->sigma_u - setting.sigma_u) / setting.sigma_u;
            ++count;
        }
        if (count)
            report.coefficients.push_back({label, "sigma_u", sbias / count,
                                           std::nan(""), std::nan(""), std::nan("")});
    };

    accumulate("actual", [](const ReplicateResult& r) { return &r.actual; });
    for (int k : setting.k_values) {
        accumulate("ps" + std::to_string(k), [k](const ReplicateResult& r) {
            for (const auto& [kk, rec] : r.pseudo)
                if (kk == k) return const_cast<const FitRecord*>(&rec);
            return static_cast<const FitRecord*>(nullptr);
        });
    }

    auto selection_for = [&](const std::string& label,
                             const std::function<const FitRecord*(const ReplicateResult&)>&
                                 pick) {
        double correct = 0.0, same = 0.0;
        int count = 0;
        for (const auto* r : ok) {
            const FitRecord* rec = pick(*r);
            if (!rec || rec->selected_model < 0) continue;
            correct += rec->selected_model == kCorrectModel;
            same += rec->selected_model == r->actual.selected_model;
            ++count;
        }
        if (count)
            report.selection.push_back({label, correct / count, same / count});
    };
    selection_for("actual", [](const ReplicateResult& r) { return &r.actual; });
    for (int k : setting.k_values) {
        selection_for("ps" + std::to_string(k), [k](const ReplicateResult& r) {
            for (const auto& [kk, rec] : r.pseudo)
                if (kk == k) return const_cast<const FitRecord*>(&rec);
            return static_cast<const FitRecord*>(nullptr);
        });
    }

    for (int k : setting.k_values) {
        double mad = 0.0;
        int count = 0;
        for (const auto* r : ok) {
            for (const auto& [kk, rec] : r->pseudo) {
                if (kk != k) continue;
                mad += ((rec.predictions - r->actual.predictions).cwiseAbs().array() /
                        r->actual.predictions.cwiseAbs().array().max(1e-12))
                           .mean();
                ++count;
            }
        }
        if (count)
            report.predictions.push_back({"ps" + std::to_string(k), mad / count});
    }
    return report;
}

namespace {

void write_report_csvs(const std::string& out_dir, const SimulationReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream f(out_dir + "/bias.csv");
        f << "data_type,coefficient,mean_rel_bias\n";
        for (const auto& c : report.coefficients)
            f << c.data_type << ',' << c.coefficient << ',' << c.mean_rel_bias << '\n';
    }
    {
        std::ofstream f(out_dir + "/coverage.csv");
        f << "data_type,coefficient,coverage,mean_ci_lower,mean_ci_upper\n";
        for (const auto& c : report.coefficients) {
            if (std::isnan(c.coverage)) continue;
            f << c.data_type << ',' << c.coefficient << ',' << c.coverage << ','
              << c.mean_ci_lower << ',' << c.mean_ci_upper << '\n';
        }
    }
    {
        std::ofstream f(out_dir + "/selection.csv");
        f << "data_type,prop_correct,prop_same_as_actual\n";
        for (const auto& s : report.selection)
            f << s.data_type << ',' << s.prop_correct << ','
              << s.prop_same_as_actual << '\n';
    }
    {
        std::ofstream f(out_dir + "/predictions.csv");
        f << "data_type,mean_abs_rel_diff\n";
        for (const auto& p : report.predictions)
            f << p.data_type << ',' << p.mean_abs_rel_diff << '\n';
    }
}

} // namespace

SimulationReport run_study(const SimSetting& setting, const SolverOptions& solver,
                           const std::string& out_dir) {
    std::vector<ReplicateResult> results(setting.reps);
#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < setting.reps; ++rep)
        results[rep] = run_replicate(setting, rep, solver);
    SimulationReport report = aggregate_report(setting, results);
    if (!out_dir.empty()) write_report_csvs(out_dir, report);
    return report;
}

} // namespace fedglm
