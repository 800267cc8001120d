#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "fedglm/pseudogen.hpp"

using namespace fedglm;

namespace {

Matrix random_matrix(int n, int p, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = normal(rng);
    return x;
}

// Maximum absolute deviation between the standardized moments of `data`
// and those recorded in `summary`.
double summary_gap(const Matrix& data, const SubgroupSummary& summary) {
    const SubgroupSummary re = summarize_subgroup(data, summary.k_max);
    double gap = (re.std_moments - summary.std_moments).cwiseAbs().maxCoeff();
    gap = std::max(gap, (re.means - summary.means).cwiseAbs().maxCoeff());
    gap = std::max(gap, (re.variances - summary.variances).cwiseAbs().maxCoeff());
    return gap;
}

} // namespace

TEST_CASE("residual problem: starting at the source data gives zero residual") {
    const Matrix x = random_matrix(25, 3, 9);
    const SubgroupSummary s = summarize_subgroup(x);
    const auto problem = MomentResidualProblem::from_summary(s);
    CHECK(problem.nu() == 34);  // C(7,4) - 1

    // Standardize the source data and flatten column-major.
    Matrix z = x;
    for (int j = 0; j < 3; ++j)
        z.col(j) = (x.col(j).array() - s.means[j]) / std::sqrt(s.variances[j]);
    Eigen::Map<const Vector> flat(z.data(), z.size());
    CHECK(problem.residuals(flat).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("residual jacobian matches finite differences") {
    const Matrix x = random_matrix(6, 2, 3);
    const SubgroupSummary s = summarize_subgroup(x);
    const auto problem = MomentResidualProblem::from_summary(s);
    Vector v = 0.5 * Vector::Ones(12) +
               Eigen::Map<const Vector>(x.data(), x.size());
    const Matrix J = problem.jacobian(v);
    const double h = 1e-6;
    for (int q = 0; q < v.size(); ++q) {
        Vector vp = v, vm = v;
        vp[q] += h;
        vm[q] -= h;
        const Vector fd = (problem.residuals(vp) - problem.residuals(vm)) / (2 * h);
        for (int t = 0; t < problem.nu(); ++t)
            CHECK(J(t, q) == doctest::Approx(fd[t]).epsilon(5e-5));
    }
}

TEST_CASE("oracle: moments of {0,1,2} are reproduced by pseudo data") {
    // mean 1, var 1, standardized moments mu2 = 2/3, mu3 = 0, mu4 = 2/3
    // on z = (x-1)/1; the generator must match them to 1e-8.
    Matrix x(3, 1);
    x << 0.0, 1.0, 2.0;
    const SubgroupSummary s = summarize_subgroup(x);
    CHECK(s.std_moment(MultiIndex{{2}}) == doctest::Approx(2.0 / 3.0));
    CHECK(s.std_moment(MultiIndex{{3}}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.std_moment(MultiIndex{{4}}) == doctest::Approx(2.0 / 3.0));

    SolverOptions opts;
    opts.seed = 11;
    const PseudoDataset ps = generate_pseudo_data(s, opts);
    CHECK(ps.achieved_max_residual < 1e-8);
    CHECK(summary_gap(ps.values, s) < 1e-6);

    // With one column and three rows the solution is the source points in
    // some order (the moment map determines the multiset here).
    std::vector<double> got{ps.values(0, 0), ps.values(1, 0), ps.values(2, 0)};
    std::sort(got.begin(), got.end());
    CHECK(got[0] == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(got[1] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(got[2] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("pseudo data match a multivariate summary on the original scale") {
    const Matrix x =
        (random_matrix(120, 4, 21).array() * 1.7 - 0.4).matrix();
    const SubgroupSummary s = summarize_subgroup(x);
    SolverOptions opts;
    opts.seed = 5;
    const PseudoDataset ps = generate_pseudo_data(s, opts);
    CHECK(ps.achieved_max_residual < 1e-8);
    CHECK(summary_gap(ps.values, s) < 1e-6);
    // but it is not the source data
    CHECK((ps.values - x).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("k_max = 2 summaries generate against the truncated index set") {
    const Matrix x = random_matrix(40, 3, 31);
    const SubgroupSummary s = summarize_subgroup(x, 2);
    CHECK(static_cast<int>(s.indices.size()) == 9);  // C(5,2) - 1
    SolverOptions opts;
    opts.seed = 2;
    const PseudoDataset ps = generate_pseudo_data(s, opts);
    CHECK(summary_gap(ps.values, s) < 1e-6);
}

TEST_CASE("generation is deterministic and seed-sensitive") {
    const Matrix x = random_matrix(30, 2, 13);
    const SubgroupSummary s = summarize_subgroup(x);
    SolverOptions a, b;
    a.seed = 1;
    b.seed = 2;
    const PseudoDataset p1 = generate_pseudo_data(s, a);
    const PseudoDataset p2 = generate_pseudo_data(s, a);
    const PseudoDataset p3 = generate_pseudo_data(s, b);
    CHECK(p1.values == p2.values);  // bitwise
    CHECK((p1.values - p3.values).cwiseAbs().maxCoeff() > 1e-8);
    // both seeds still satisfy the same moments
    CHECK(summary_gap(p3.values, s) < 1e-6);
}

TEST_CASE("generate_provider covers every subgroup with provider labels") {
    ProviderSummary prov;
    prov.provider_id = "site-A";
    prov.variable_names = {"a", "b"};
    prov.variable_kinds = {VariableKind::numeric, VariableKind::numeric};
    prov.k_max = 4;
    prov.subgroups.push_back(summarize_subgroup(random_matrix(40, 2, 1)));
    prov.subgroups.push_back(summarize_subgroup(random_matrix(55, 2, 2)));

    SolverOptions opts;
    opts.seed = 99;
    const auto datasets = generate_provider(prov, opts);
    REQUIRE(datasets.size() == 2);
    CHECK(datasets[0].values.rows() == 40);
    CHECK(datasets[1].values.rows() == 55);
    for (int k = 0; k < 2; ++k) {
        CHECK(datasets[k].group_id == "site-A");
        CHECK(datasets[k].subgroup_index == k);
        CHECK(summary_gap(datasets[k].values, prov.subgroups[k]) < 1e-6);
    }
}
