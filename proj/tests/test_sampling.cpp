#include <cmath>
#include <sstream>

#include <omp.h>

#include "doctest.h"
#include "helpers.hpp"
#include "oufield/errors.hpp"
#include "oufield/mcverify.hpp"
#include "oufield/rng.hpp"
#include "oufield/sampling.hpp"

using namespace oufield;

namespace {

bool same_samples(const std::vector<FieldSample>& a, const std::vector<FieldSample>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (!testutil::bitwise_equal(a[r].values, b[r].values)) return false;
    }
    return true;
}

template <class Fn>
auto with_threads(int n, Fn fn) {
    const int before = omp_get_max_threads();
    omp_set_num_threads(n);
    auto out = fn();
    omp_set_num_threads(before);
    return out;
}

}  // namespace

TEST_SUITE("sampling") {
    TEST_CASE("factorize") {
        const Factorization id = factorize(Eigen::MatrixXd::Identity(4, 4));
        CHECK(id.jitter == 0.0);
        CHECK(testutil::max_abs(id.lower - Eigen::MatrixXd::Identity(4, 4)) == 0.0);

        Eigen::MatrixXd one(1, 1);
        one << 0.0625;
        CHECK(factorize(one).lower(0, 0) == 0.25);

        const auto g = testutil::interior_grid(1, 1, 4, 4);
        const Eigen::MatrixXd c = covariance_matrix(tied_down_kernel(), g);
        const Factorization f = factorize(c);
        CHECK(f.jitter <= 1e-10 * c.trace() / c.rows());
        CHECK(testutil::max_abs(f.lower * f.lower.transpose() - c) <= 1e-15);
        CHECK(testutil::max_abs(f.lower.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()) == 0.0);
    }

    TEST_CASE("factorize rejects indefinite and asymmetric input") {
        Eigen::MatrixXd m(3, 3);
        m << 1, 0, 0, 0, 1, 2, 0, 2, 1;
        try {
            factorize(m);
            FAIL("expected NotPsdError");
        } catch (const NotPsdError& e) {
            CHECK(e.minor_index() == 2);  // zero-based pivot of the 3x3 leading minor
        }
        Eigen::MatrixXd asym(2, 2);
        asym << 1, 0.5, 0.1, 1;
        CHECK_THROWS_AS(factorize(asym), DomainError);
    }

    TEST_CASE("masked factorization keeps zero-variance rows at zero") {
        const auto g = testutil::grid({0.0, 0.3, 0.8}, {0.0, 0.5}, true);
        const Eigen::MatrixXd c = covariance_matrix(wiener_kernel(), g);
        const Factorization f = factorize_masked(c);
        CHECK(testutil::max_abs(f.lower * f.lower.transpose() - c) <= 1e-15);
        for (int a : {0, 1, 2, 4}) CHECK(f.lower.row(a).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("zero replicates") {
        const auto g = testutil::interior_grid(1, 1, 3, 3);
        CHECK(sample_dense(tied_down_kernel(), g, 1, 0).empty());
        CHECK(sample_kronecker(tied_down_kernel(), g, 1, 0).empty());
        CHECK(sample_bridge_via_wiener(transform_tied_down(), g, 1, 0).empty());
        CHECK(sample_ou_via_wiener(kStandardOU, g, 1, 0).empty());
    }

    TEST_CASE("sample metadata") {
        const auto g = testutil::interior_grid(1, 1, 3, 4);
        const auto s = sample_dense(tied_down_kernel(), g, 99, 3);
        REQUIRE(s.size() == 3);
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(s[r].seed == 99);
            CHECK(s[r].replicate_index == r);
            CHECK(s[r].values.rows() == 3);
            CHECK(s[r].values.cols() == 4);
            CHECK(*s[r].grid == g);
        }
    }

    TEST_CASE("variance of the tied-down bridge at the centre") {
        const auto g = testutil::grid({0.5}, {0.5});
        const std::size_t n = 100000;
        const double band = 3 * std::sqrt(2.0 / n) * 0.0625;
        for (auto samples : {sample_dense(tied_down_kernel(), g, 5, n), sample_kronecker(tied_down_kernel(), g, 6, n),
                             sample_bridge_via_wiener(transform_tied_down(), g, 7, n)}) {
            const EmpiricalCovariance e = empirical_covariance(samples);
            CHECK(std::abs(e.cov(0, 0) - 0.0625) <= band);
        }
    }

    TEST_CASE("zero-variance points are exact zeros") {
        const auto g = testutil::grid({0.0, 0.4, 0.9}, {0.2, 0.7}, true);
        for (const auto& s : sample_dense(wiener_kernel(), g, 3, 20)) {
            CHECK(s.values.row(0).cwiseAbs().maxCoeff() == 0.0);
            CHECK_FALSE(std::signbit(s.values(0, 0)));
            CHECK(s.values.row(1).cwiseAbs().minCoeff() > 0.0);
        }
        for (const auto& s : sample_kronecker(wiener_kernel(), g, 3, 20)) {
            CHECK(s.values.row(0).cwiseAbs().maxCoeff() == 0.0);
        }
        const auto border = testutil::grid({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}, true);
        for (const auto& s : sample_bridge_via_wiener(transform_tied_down(), border, 3, 10)) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    if (i != 1 || j != 1) CHECK(s.values(i, j) == 0.0);
            CHECK(s.values(1, 1) != 0.0);
        }
        // Without include_boundary, zero-set points are rejected.
        CHECK_THROWS_AS(sample_dense(wiener_kernel(), testutil::grid({0.0, 0.4}, {0.2}), 3, 1), DomainError);
        CHECK_THROWS_AS(sample_bridge_via_wiener(transform_tied_down(), testutil::grid({0.0, 0.4}, {0.2}), 3, 1),
                        DomainError);
    }

    TEST_CASE("kronecker factors reproduce the dense covariance") {
        const auto unit = testutil::interior_grid(1, 1, 5, 5);
        const std::vector<std::pair<Kernel2D, GridSpec>> cases{
            {tied_down_kernel(), unit},
            {kiefer_kernel(), testutil::interior_grid(1, 5, 5, 5)},
            {scaled_bridge_kernel(2, 0.3, 3, 2), testutil::interior_grid(2, 3, 5, 5)},
            {scaled_bridge_kernel(1, 0.5, 1, 0.5), unit},
            {wiener_kernel(), unit},
            {ou_kernel({0.5, 0.5, 1}), testutil::grid(linspace(-1, 1, 5), linspace(-1, 1, 5))},
            {fg_bridge_kernel(CdfSpec::exponential(1), CdfSpec::exponential(1)), testutil::interior_grid(5, 5, 5, 5)}};
        for (const auto& [k, g] : cases) {
            const SeparableKernel* sep = k.separable();
            REQUIRE(sep != nullptr);
            const KroneckerFactors f = kronecker_factors(sep->s_axis, sep->t_axis, sep->scale, g);
            CHECK_MESSAGE(testutil::max_abs(reconstruct_covariance(f) - covariance_matrix(k, g)) <= 1e-12, k.name());
        }
        CHECK_THROWS_AS(sample_kronecker(bivariate_bridge_kernel(), unit, 1, 1), DomainError);
    }

    TEST_CASE("degenerate axes reduce to one-dimensional sampling") {
        const auto row = testutil::grid({0.5}, interior_points(1, 6, 1e-2));
        const auto a = sample_kronecker(tied_down_kernel(), row, 4, 3);
        const Factorization f = factorize(0.25 * axis_covariance_matrix(BridgeAxis{}, row.t_points));
        for (const auto& s : a) {
            Eigen::VectorXd z(6);
            for (int j = 0; j < 6; ++j) z(j) = stream_normal(4, s.replicate_index, j);
            const Eigen::VectorXd x = f.lower * z;
            for (int j = 0; j < 6; ++j) CHECK(s.values(0, j) == doctest::Approx(x(j)).epsilon(1e-12));
        }
        const auto col = testutil::grid(interior_points(1, 6, 1e-2), {0.5});
        const auto b = sample_kronecker(tied_down_kernel(), col, 4, 3);
        const auto c = sample_dense(tied_down_kernel(), col, 4, 3);
        for (int r = 0; r < 3; ++r) CHECK(testutil::max_abs(b[r].values - c[r].values) <= 1e-14);
    }

    TEST_CASE("kronecker and dense paths agree in distribution, not pathwise") {
        const auto g = testutil::interior_grid(1, 1, 4, 4);
        const auto d = sample_dense(tied_down_kernel(), g, 1234, 100000);
        const auto k = sample_kronecker(tied_down_kernel(), g, 1234, 100000);
        CHECK(testutil::max_abs(d[0].values - k[0].values) > 0.0);
        CHECK(covariance_gate(empirical_covariance(d), tied_down_kernel()).passed);
        CHECK(covariance_gate(empirical_covariance(k), tied_down_kernel()).passed);
    }

    TEST_CASE("ou via wiener") {
        const std::size_t n = 200000;
        const auto single = sample_ou_via_wiener(kStandardOU, testutil::grid({0.0}, {0.0}), 21, n);
        const EmpiricalCovariance e1 = empirical_covariance(single);
        CHECK(std::abs(e1.cov(0, 0) - 1.0) <= 3 * std::sqrt(2.0 / n));

        const auto pair = sample_ou_via_wiener(kStandardOU, testutil::grid({0.0, std::log(9.0)}, {0.0}), 22, n);
        const EmpiricalCovariance e2 = empirical_covariance(pair);
        const double corr = e2.cov(0, 1) / std::sqrt(e2.cov(0, 0) * e2.cov(1, 1));
        CHECK(std::abs(corr - 1.0 / 3.0) <= 0.01);

        CHECK_THROWS_AS(sample_ou_via_wiener({2.0, 0.5, 1.0}, testutil::grid({200.0}, {0.0}), 1, 1), DomainError);
    }

    TEST_CASE("ou samples scale linearly in sigma") {
        const auto g = testutil::grid(linspace(-1, 1, 4), linspace(-1, 1, 3));
        const auto a = sample_ou_via_wiener({0.7, 1.1, 1.0}, g, 8, 5);
        const auto b = sample_ou_via_wiener({0.7, 1.1, 2.5}, g, 8, 5);
        for (int r = 0; r < 5; ++r) CHECK(testutil::max_abs(b[r].values - 2.5 * a[r].values) <= 1e-14);
    }

    TEST_CASE("reduced form holds pathwise") {
        const auto centre = sample_bridge_via_wiener(transform_tied_down(), testutil::grid({0.5}, {0.5}), 77, 10);
        for (const auto& s : centre) {
            const double w11 = wiener_from_increments({1.0}, {1.0}, 77, s.replicate_index)(0, 0);
            CHECK(s.values(0, 0) == doctest::Approx(0.25 * w11).epsilon(1e-15));
        }
        // Zero Wiener draw gives a zero field: the map is linear in W.
        const Eigen::MatrixXd w = wiener_from_increments({0.5, 1.0, 2.0}, {1.0, 3.0}, 5, 0);
        CHECK(w.rows() == 3);
        CHECK(w.cols() == 2);
        CHECK((0.0 * w).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("wiener increments have the sheet covariance") {
        const std::vector<double> u{0.5, 1.0, 2.5}, v{0.2, 1.5};
        const std::size_t n = 60000;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(6, 6);
        for (std::size_t r = 0; r < n; ++r) {
            const Eigen::MatrixXd w = wiener_from_increments(u, v, 9, r);
            const Eigen::Map<const Eigen::VectorXd> x(w.data(), 6);
            acc += x * x.transpose();
        }
        acc /= static_cast<double>(n);
        for (int a = 0; a < 6; ++a) {
            for (int b = 0; b < 6; ++b) {
                // Column-major map: index = i + 3 j.
                const Point p{u[a % 3], v[a / 3]}, q{u[b % 3], v[b / 3]};
                const double c = eval_wiener(p, q);
                const double se = std::sqrt((eval_wiener(p, p) * eval_wiener(q, q) + c * c) / n);
                CHECK(std::abs(acc(a, b) - c) <= 5 * se);
            }
        }
    }

    TEST_CASE("image overflow is reported with a margin hint") {
        const auto g = testutil::grid(interior_points(1, 5, 1e-5), {0.5});
        try {
            sample_bridge_via_wiener(transform_scaled_field(1, 2, 1, 1), g, 1, 1);
            FAIL("expected DomainError");
        } catch (const DomainError& e) {
            CHECK(std::string(e.what()).find("margin") != std::string::npos);
        }
    }

    TEST_CASE("samples do not depend on the thread count") {
        const auto g = testutil::interior_grid(1, 1, 5, 6);
        const auto ou_grid = testutil::grid(linspace(-1, 1, 5), linspace(-1, 1, 6));
        auto draw = [&] {
            std::vector<std::vector<FieldSample>> all;
            all.push_back(sample_dense(bivariate_bridge_kernel(), g, 31, 700));
            all.push_back(sample_kronecker(kiefer_kernel(), g, 31, 700));
            all.push_back(sample_bridge_via_wiener(transform_tied_down(), g, 31, 700));
            all.push_back(sample_ou_via_wiener(kStandardOU, ou_grid, 31, 700));
            return all;
        };
        const auto one = with_threads(1, draw);
        const auto many = with_threads(4, draw);
        for (std::size_t k = 0; k < one.size(); ++k) CHECK(same_samples(one[k], many[k]));
    }

    TEST_CASE("csv export") {
        const auto g = testutil::grid({0.25, 0.5}, {0.5});
        const auto s = sample_dense(tied_down_kernel(), g, 7, 2);
        std::ostringstream os;
        write_samples_csv(os, g, s, {{"seed", "7"}, {"kernel", "tied-down"}});
        std::istringstream is(os.str());
        std::string line;
        std::getline(is, line);
        CHECK(line == "# kernel: tied-down");
        std::getline(is, line);
        CHECK(line == "# seed: 7");
        std::getline(is, line);
        CHECK(line == "s,t,replicate_0,replicate_1");
        std::getline(is, line);
        CHECK(line.rfind("0.25,0.5,", 0) == 0);
        const double back = std::stod(line.substr(line.rfind(',') + 1));
        CHECK(back == s[1].values(0, 0));

        std::ostringstream empty;
        write_samples_csv(empty, g, {}, {});
        CHECK(empty.str() == "s,t\n");
    }

    TEST_CASE("format_double round-trips") {
        CHECK(format_double(0.1) == "0.1");
        CHECK(format_double(0.015625) == "0.015625");
        CHECK(format_double(-0.0) == "0");
        std::mt19937_64 gen(1);
        std::uniform_real_distribution<double> u(-1e3, 1e3);
        for (int k = 0; k < 1000; ++k) {
            const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
            CHECK(std::stod(format_double(x)) == x);
        }
    }
}
