// Wall-clock comparison of the sampling routes and of the serial and
// OpenMP assembly / accumulation paths.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "oufield/kernels.hpp"
#include "oufield/mcverify.hpp"
#include "oufield/sampling.hpp"

using namespace oufield;

namespace {

double seconds(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n_side = argc > 1 ? std::stoul(argv[1]) : 40;
    const std::size_t replicates = argc > 2 ? std::stoul(argv[2]) : 1000;

    GridSpec grid;
    grid.s_points = interior_points(1.0, n_side, 1e-3);
    grid.t_points = interior_points(1.0, n_side, 1e-3);
    const Kernel2D kernel = tied_down_kernel();

    std::printf("threads: %d, grid %zux%zu, %zu replicates\n", omp_get_max_threads(), n_side, n_side, replicates);

    const double dense = seconds([&] { sample_dense(kernel, grid, 1, replicates); });
    const double kron = seconds([&] { sample_kronecker(kernel, grid, 1, replicates); });
    std::printf("sample dense      %9.4f s\n", dense);
    std::printf("sample kronecker  %9.4f s   (x%.1f)\n", kron, dense / kron);

    const double cov_serial = seconds([&] { covariance_matrix_serial(kernel, grid); });
    const double cov_parallel = seconds([&] { covariance_matrix(kernel, grid); });
    std::printf("covariance serial   %9.4f s\n", cov_serial);
    std::printf("covariance parallel %9.4f s\n", cov_parallel);

    const auto samples = sample_kronecker(kernel, grid, 2, replicates);
    const double emp_serial = seconds([&] { empirical_covariance_serial(samples); });
    const double emp_parallel = seconds([&] { empirical_covariance(samples); });
    std::printf("empirical serial    %9.4f s\n", emp_serial);
    std::printf("empirical parallel  %9.4f s\n", emp_parallel);
    return 0;
}
