#include <cmath>

#include <omp.h>

#include "doctest.h"
#include "helpers.hpp"
#include "oufield/errors.hpp"
#include "oufield/mcverify.hpp"
#include "oufield/rng.hpp"

using namespace oufield;

namespace {

std::vector<FieldSample> explicit_batch(const GridSpec& grid, const std::vector<Eigen::MatrixXd>& values) {
    auto shared = std::make_shared<const GridSpec>(grid);
    std::vector<FieldSample> out;
    for (std::size_t r = 0; r < values.size(); ++r) out.push_back({shared, values[r], 0, r});
    return out;
}

EmpiricalCovariance exact(const Kernel2D& k, const GridSpec& g, std::size_t n) {
    return {std::make_shared<const GridSpec>(g), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size())),
            covariance_matrix(k, g), n};
}

}  // namespace

TEST_SUITE("mcverify") {
    TEST_CASE("two-replicate estimator is exact") {
        const auto g = testutil::grid({0.2, 0.6}, {0.5});
        Eigen::MatrixXd v(2, 1);
        v << 0.5, -1.5;
        const auto e = empirical_covariance(explicit_batch(g, {v, -v}));
        CHECK(e.n == 2);
        CHECK(e.mean.cwiseAbs().maxCoeff() == 0.0);
        // Divisor n - 1 = 1: cov = v v^T + (-v)(-v)^T.
        CHECK(e.cov(0, 0) == 0.5);
        CHECK(e.cov(1, 1) == 4.5);
        CHECK(e.cov(0, 1) == -1.5);
        CHECK(e.cov(1, 0) == -1.5);

        Eigen::MatrixXd a(2, 1), b(2, 1), c(2, 1);
        a << 1, 2;
        b << 3, 2;
        c << 2, 5;
        const auto e3 = empirical_covariance(explicit_batch(g, {a, b, c}));
        CHECK(e3.mean(0) == 2.0);
        CHECK(e3.mean(1) == 3.0);
        CHECK(e3.cov(0, 0) == 1.0);
        CHECK(e3.cov(1, 1) == 3.0);
        CHECK(e3.cov(0, 1) == 0.0);
    }

    TEST_CASE("constant replicates have zero covariance") {
        const auto g = testutil::grid({0.2, 0.6}, {0.1, 0.5});
        Eigen::MatrixXd v(2, 2);
        v << 0.3, -0.7, 1.1, 2.0;
        const auto e = empirical_covariance(explicit_batch(g, std::vector<Eigen::MatrixXd>(1500, v)));
        CHECK(e.cov.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("estimator preconditions") {
        const auto g = testutil::grid({0.2}, {0.5});
        Eigen::MatrixXd v(1, 1);
        v << 1.0;
        CHECK_THROWS_AS(empirical_covariance(explicit_batch(g, {v})), DomainError);
        auto mixed = explicit_batch(g, {v, v});
        mixed[1].grid = std::make_shared<const GridSpec>(testutil::grid({0.3}, {0.5}));
        CHECK_THROWS_AS(empirical_covariance(mixed), DomainError);
    }

    TEST_CASE("chunked estimator matches the serial reference and ignores thread count") {
        const auto g = testutil::interior_grid(1, 1, 4, 3);
        const auto s = sample_dense(tied_down_kernel(), g, 3, 5000);
        const auto ref = empirical_covariance_serial(s);
        const int before = omp_get_max_threads();
        omp_set_num_threads(1);
        const auto a = empirical_covariance(s);
        omp_set_num_threads(4);
        const auto b = empirical_covariance(s);
        omp_set_num_threads(before);
        CHECK(testutil::bitwise_equal(a.cov, b.cov));
        CHECK(testutil::bitwise_equal(a.mean, b.mean));
        CHECK(testutil::max_abs(a.cov - ref.cov) <= 1e-15);
        CHECK(testutil::max_abs(a.mean - ref.mean) <= 1e-15);
        CHECK(testutil::bitwise_equal(a.cov, a.cov.transpose()));
        CHECK(a.cov.diagonal().minCoeff() >= 0.0);
    }

    TEST_CASE("gate against its own target") {
        const auto g = testutil::interior_grid(1, 1, 3, 3);
        const VerificationReport r = covariance_gate(exact(tied_down_kernel(), g, 1000), tied_down_kernel());
        CHECK(r.passed);
        CHECK(r.max_residual == 0.0);
        CHECK(r.n_entries_outside_band == 0);
        CHECK(r.n_entries_tested == 45);
        CHECK(r.tolerance == 3.0);
    }

    TEST_CASE("tied-down samples pass their gate and fail the bivariate target") {
        const auto g = testutil::interior_grid(1, 1, 6, 6);
        const auto e = empirical_covariance(sample_bridge_via_wiener(transform_tied_down(), g, 4242, 100000));
        CHECK(covariance_gate(e, tied_down_kernel()).passed);
        const VerificationReport bad = covariance_gate(e, bivariate_bridge_kernel());
        CHECK_FALSE(bad.passed);
        // The largest residual sits where the two kernels differ most.
        const Eigen::MatrixXd diff = covariance_matrix(bivariate_bridge_kernel(), g) - covariance_matrix(tied_down_kernel(), g);
        CHECK(bad.max_residual > 0.5 * testutil::max_abs(diff));
    }

    TEST_CASE("gate calibration") {
        const auto g = testutil::interior_grid(1, 1, 4, 4);
        int passed = 0;
        for (std::uint64_t trial = 0; trial < 100; ++trial) {
            const auto s = sample_dense(tied_down_kernel(), g, mix_seed(1000 + trial), 50000);
            if (covariance_gate(empirical_covariance(s), tied_down_kernel()).passed) ++passed;
        }
        MESSAGE("gate passed in " << passed << " of 100 trials");
        CHECK(passed >= 99);
    }

    TEST_CASE("stationarity gate") {
        const auto ga = testutil::grid(linspace(-1, 1, 4), linspace(-1, 1, 4));
        GridSpec gb = ga;
        for (double& s : gb.s_points) s += 1.7;
        for (double& t : gb.t_points) t -= 0.4;
        CHECK(grid_shift(ga, gb).s == doctest::Approx(1.7));
        CHECK(grid_shift(ga, gb).t == doctest::Approx(-0.4));

        const std::size_t n = 100000;
        const auto a = empirical_covariance(sample_ou_via_wiener(kStandardOU, ga, 1, n));
        const auto same = empirical_covariance(sample_ou_via_wiener(kStandardOU, ga, 2, n));
        const auto b = empirical_covariance(sample_ou_via_wiener(kStandardOU, gb, 3, n));
        CHECK(ou_stationarity_gate(a, same, kStandardOU).passed);
        CHECK(ou_stationarity_gate(a, b, kStandardOU).passed);

        // Broken control: shift only the s-argument of the target evaluation.
        Eigen::MatrixXd broken(16, 16);
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t j = 0; j < 16; ++j) {
                const Point p = ga.point(i), q = ga.point(j);
                broken(i, j) = eval_ou(kStandardOU, {p.s + 1.7, p.t}, q);
            }
        CHECK_FALSE(ou_stationarity_gate(a, b, broken).passed);

        GridSpec skew = ga;
        skew.s_points.back() += 0.1;
        CHECK_THROWS_AS(grid_shift(ga, skew), DomainError);
        const auto c = empirical_covariance(sample_ou_via_wiener(kStandardOU, skew, 4, 100));
        CHECK_THROWS_AS(ou_stationarity_gate(a, c, kStandardOU), DomainError);
    }

    TEST_CASE("report json") {
        VerificationReport r;
        r.check_name = "x";
        r.passed = true;
        r.max_residual = std::numeric_limits<double>::infinity();
        r.metadata["seed"] = "1";
        const auto j = to_json(r);
        for (const char* key : {"check_name", "pass", "max_residual", "residual_location", "n_entries_tested",
                                "n_entries_outside_band", "tolerance", "metadata"})
            CHECK(j.contains(key));
        CHECK(j["max_residual"].is_null());
        CHECK(j["metadata"]["seed"] == "1");
    }
}
