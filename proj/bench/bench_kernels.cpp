// Timing comparison of the serial reference kernels against the OpenMP
// versions used by the pseudo-data generator. Run: bench_kernels [n p k reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <vector>

#include "fedglm/kernels.hpp"
#include "fedglm/multi_index.hpp"

using namespace fedglm;

namespace {

double seconds_per_call(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

} // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 250;
    const int p = argc > 2 ? std::atoi(argv[2]) : 5;
    const int k = argc > 3 ? std::atoi(argv[3]) : 4;
    const int reps = argc > 4 ? std::atoi(argv[4]) : 20;

    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal;
    Matrix z(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) z(i, j) = normal(rng);

    const auto indices = enumerate_multi_indices(p, k);
    const int nu = static_cast<int>(indices.size());
    PowerTable tab = PowerTable::build(z, k);
    std::vector<double> out(nu);
    Matrix J(nu, static_cast<Eigen::Index>(n) * p);

    std::printf("n=%d p=%d k=%d nu=%d reps=%d\n", n, p, k, nu, reps);

    const double vs = seconds_per_call(
        [&] { moment_values_serial(tab, indices, out.data()); }, reps);
    const double vo = seconds_per_call(
        [&] { moment_values_omp(tab, indices, out.data()); }, reps);
    std::printf("moment values : serial %.3f ms | omp %.3f ms | speedup %.2fx\n",
                1e3 * vs, 1e3 * vo, vs / vo);

    const double js = seconds_per_call(
        [&] { moment_jacobian_serial(tab, indices, J); }, reps);
    const double jo = seconds_per_call(
        [&] { moment_jacobian_omp(tab, indices, J); }, reps);
    std::printf("jacobian      : serial %.3f ms | omp %.3f ms | speedup %.2fx\n",
                1e3 * js, 1e3 * jo, js / jo);
    return 0;
}
