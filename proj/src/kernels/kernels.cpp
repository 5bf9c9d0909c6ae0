#include "oufield/kernels.hpp"

#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <utility>

#include "oufield/errors.hpp"

namespace oufield {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smaller value first.
std::pair<double, double> ordered(double a, double b) { return a <= b ? std::pair{a, b} : std::pair{b, a}; }

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

void check_unit(double x, const char* kernel) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string(kernel) + ": argument " + fmt(x) + " outside [0, 1]");
}

void check_positive(double x, const char* what) {
    if (!(std::isfinite(x) && x > 0.0)) throw DomainError(std::string(what) + " must be positive and finite, got " + fmt(x));
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void OUParams::validate() const {
    check_positive(alpha, "alpha");
    check_positive(beta, "beta");
    check_positive(sigma, "sigma");
}

// CdfSpec ------------------------------------------------------------------

CdfSpec CdfSpec::make(std::string name, Fn cdf, double horizon, Fn density) {
    require(static_cast<bool>(cdf), "cdf evaluator is empty");
    require(horizon > 0.0, "cdf horizon must be positive");
    if (!(cdf(0.0) == 0.0)) throw DomainError("cdf " + name + " must satisfy F(0) = 0");

    // Spot check on ordered pairs inside [0, horizon).
    std::mt19937_64 gen(0x5eedcdfULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw = [&] {
        const double u = unif(gen);
        return std::isinf(horizon) ? u / (1.0 - u) : u * horizon;
    };
    for (int k = 0; k < 64; ++k) {
        auto [a, b] = ordered(draw(), draw());
        if (!(a < horizon && b < horizon)) continue;
        const double fa = cdf(a);
        const double fb = cdf(b);
        if (!(fa >= 0.0 && fb <= 1.0)) throw DomainError("cdf " + name + " leaves [0, 1] near s = " + fmt(b));
        if (!(fa <= fb)) throw DomainError("cdf " + name + " is not monotone on (" + fmt(a) + ", " + fmt(b) + ")");
    }
    return CdfSpec(std::move(name), std::move(cdf), horizon, std::move(density));
}

CdfSpec CdfSpec::uniform() {
    return make(
        "uniform", [](double s) { return s; }, 1.0, [](double) { return 1.0; });
}

CdfSpec CdfSpec::exponential(double rate) {
    check_positive(rate, "exponential rate");
    return make(
        "exponential(" + fmt(rate) + ")", [rate](double s) { return -std::expm1(-rate * s); }, kInf,
        [rate](double s) { return rate * std::exp(-rate * s); });
}

// Closed forms -------------------------------------------------------------

double pow_diff_quotient(double x, double y, double eps) {
    const double log_ratio = std::log(x / y);
    const double z = eps * log_ratio;
    const double y_pow = eps == 0.0 ? 1.0 : std::pow(y, eps);
    if (std::abs(z) < 1e-8) {
        return y_pow * log_ratio * (1.0 + z / 2.0 + z * z / 6.0);
    }
    return y_pow * std::expm1(z) / eps;
}

double eval_wiener(Point p, Point q) {
    require(p.s >= 0.0 && p.t >= 0.0 && q.s >= 0.0 && q.t >= 0.0, "wiener: arguments must be non-negative");
    return std::min(p.s, q.s) * std::min(p.t, q.t);
}

double eval_ou(const OUParams& params, Point p, Point q) {
    params.validate();
    const auto [s_lo, s_hi] = ordered(p.s, q.s);
    const auto [t_lo, t_hi] = ordered(p.t, q.t);
    return params.stationary_variance() * std::exp(-params.alpha * (s_hi - s_lo) - params.beta * (t_hi - t_lo));
}

double eval_bivariate_bridge(Point p, Point q) {
    for (double x : {p.s, p.t, q.s, q.t}) check_unit(x, "bivariate bridge");
    const auto [s_lo, s_hi] = ordered(p.s, q.s);
    const auto [t_lo, t_hi] = ordered(p.t, q.t);
    return s_lo * t_lo - (s_lo * s_hi) * (t_lo * t_hi);
}

double eval_tied_down_bridge(Point p, Point q) {
    for (double x : {p.s, p.t, q.s, q.t}) check_unit(x, "tied-down bridge");
    const auto [s_lo, s_hi] = ordered(p.s, q.s);
    const auto [t_lo, t_hi] = ordered(p.t, q.t);
    return (s_lo - s_lo * s_hi) * (t_lo - t_lo * t_hi);
}

double eval_scaled_bridge_axis(double S, double alpha, double s1, double s2) {
    check_positive(S, "scaled bridge horizon");
    check_positive(alpha, "scaled bridge alpha");
    const auto [lo, hi] = ordered(s1, s2);
    if (!(lo >= 0.0 && hi <= S)) throw DomainError("scaled bridge: arguments must lie in [0, " + fmt(S) + "]");
    if (hi == S) return 0.0;
    if (alpha == 0.5) {
        return std::sqrt((S - lo) * (S - hi)) * std::log(S / (S - lo));
    }
    return std::pow(S - lo, alpha) * std::pow(S - hi, alpha) * pow_diff_quotient(S, S - lo, 1.0 - 2.0 * alpha);
}

double eval_kiefer(Point p, Point q) {
    check_unit(p.s, "kiefer (s)");
    check_unit(q.s, "kiefer (s)");
    require(p.t >= 0.0 && q.t >= 0.0, "kiefer: t arguments must be non-negative");
    const auto [s_lo, s_hi] = ordered(p.s, q.s);
    return (s_lo - s_lo * s_hi) * std::min(p.t, q.t);
}

namespace {

double cdf_bridge(const CdfSpec& F, double a, double b, const char* coordinate) {
    const auto [lo, hi] = ordered(a, b);
    if (!(lo >= 0.0 && hi < F.horizon())) {
        throw DomainError(std::string("(F,G)-bridge: ") + coordinate + " arguments must lie in [0, " +
                          fmt(F.horizon()) + ")");
    }
    const double f_lo = F(lo);
    return f_lo - f_lo * F(hi);
}

}  // namespace

double eval_fg_bridge(const CdfSpec& F, const CdfSpec& G, Point p, Point q) {
    return cdf_bridge(F, p.s, q.s, "s") * cdf_bridge(G, p.t, q.t, "t");
}

// Axis kernels -------------------------------------------------------------

AxisDomain axis_domain(const AxisKernel& axis) {
    return std::visit(overloaded{
                          [](const WienerAxis&) { return AxisDomain{0.0, kInf, false}; },
                          [](const BridgeAxis&) { return AxisDomain{0.0, 1.0, false}; },
                          [](const ScaledBridgeAxis& a) { return AxisDomain{0.0, a.horizon, false}; },
                          [](const OUAxis&) { return AxisDomain{-kInf, kInf, false}; },
                          [](const CdfBridgeAxis& a) { return AxisDomain{0.0, a.cdf.horizon(), true}; },
                      },
                      axis);
}

std::string axis_name(const AxisKernel& axis) {
    return std::visit(overloaded{
                          [](const WienerAxis&) { return std::string("wiener"); },
                          [](const BridgeAxis&) { return std::string("bridge"); },
                          [](const ScaledBridgeAxis& a) {
                              return "scaled-bridge(S=" + fmt(a.horizon) + ",alpha=" + fmt(a.alpha) + ")";
                          },
                          [](const OUAxis& a) { return "ou(rate=" + fmt(a.rate) + ")"; },
                          [](const CdfBridgeAxis& a) { return "cdf-bridge(" + a.cdf.name() + ")"; },
                      },
                      axis);
}

void check_axis_domain(const AxisKernel& axis, double a, const char* coordinate) {
    const AxisDomain dom = axis_domain(axis);
    if (!dom.contains(a)) {
        throw DomainError(axis_name(axis) + ": " + coordinate + " = " + fmt(a) + " outside [" + fmt(dom.lower) +
                          ", " + fmt(dom.upper) + (dom.upper_open ? ")" : "]"));
    }
}

double eval_axis(const AxisKernel& axis, double a, double b) {
    return std::visit(overloaded{
                          [&](const WienerAxis&) {
                              require(a >= 0.0 && b >= 0.0, "wiener axis: arguments must be non-negative");
                              return std::min(a, b);
                          },
                          [&](const BridgeAxis&) {
                              check_unit(a, "bridge axis");
                              check_unit(b, "bridge axis");
                              const auto [lo, hi] = ordered(a, b);
                              return lo - lo * hi;
                          },
                          [&](const ScaledBridgeAxis& k) { return eval_scaled_bridge_axis(k.horizon, k.alpha, a, b); },
                          [&](const OUAxis& k) {
                              const auto [lo, hi] = ordered(a, b);
                              return std::exp(-k.rate * (hi - lo));
                          },
                          [&](const CdfBridgeAxis& k) { return cdf_bridge(k.cdf, a, b, "axis"); },
                      },
                      axis);
}

// Kernel2D -----------------------------------------------------------------

double Kernel2D::operator()(Point p, Point q) const {
    if (const auto* sep = std::get_if<SeparableKernel>(&impl_)) {
        return sep->scale * eval_axis(sep->s_axis, p.s, q.s) * eval_axis(sep->t_axis, p.t, q.t);
    }
    return eval_bivariate_bridge(p, q);
}

AxisDomain Kernel2D::s_domain() const {
    if (const auto* sep = separable()) return axis_domain(sep->s_axis);
    return {0.0, 1.0, false};
}

AxisDomain Kernel2D::t_domain() const {
    if (const auto* sep = separable()) return axis_domain(sep->t_axis);
    return {0.0, 1.0, false};
}

Kernel2D wiener_kernel() { return {"wiener", SeparableKernel{WienerAxis{}, WienerAxis{}, 1.0}}; }

Kernel2D ou_kernel(const OUParams& params) {
    params.validate();
    return {"ou", SeparableKernel{OUAxis{params.alpha}, OUAxis{params.beta}, params.stationary_variance()}};
}

Kernel2D bivariate_bridge_kernel() { return {"bivariate-bridge", BivariateBridgeKernel{}}; }

Kernel2D tied_down_kernel() { return {"tied-down", SeparableKernel{BridgeAxis{}, BridgeAxis{}, 1.0}}; }

Kernel2D scaled_bridge_kernel(double S, double alpha, double T, double beta) {
    check_positive(S, "S");
    check_positive(T, "T");
    check_positive(alpha, "alpha");
    check_positive(beta, "beta");
    return {"scaled", SeparableKernel{ScaledBridgeAxis{S, alpha}, ScaledBridgeAxis{T, beta}, 1.0}};
}

Kernel2D kiefer_kernel() { return {"kiefer", SeparableKernel{BridgeAxis{}, WienerAxis{}, 1.0}}; }

Kernel2D fg_bridge_kernel(const CdfSpec& F, const CdfSpec& G) {
    return {"fg", SeparableKernel{CdfBridgeAxis{F}, CdfBridgeAxis{G}, 1.0}};
}

// Assembly -----------------------------------------------------------------

Eigen::MatrixXd covariance_matrix_serial(const Kernel2D& kernel, const GridSpec& grid) {
    grid.validate();
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        const Point p = grid.point(static_cast<std::size_t>(a));
        for (Eigen::Index b = a; b < n; ++b) {
            const double v = kernel(p, grid.point(static_cast<std::size_t>(b)));
            cov(a, b) = v;
            cov(b, a) = v;
        }
    }
    return cov;
}

Eigen::MatrixXd covariance_matrix(const Kernel2D& kernel, const GridSpec& grid) {
    grid.validate();
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd cov(n, n);
    // Domain errors cannot escape an OpenMP region; capture the first one.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index a = 0; a < n; ++a) {
        try {
            const Point p = grid.point(static_cast<std::size_t>(a));
            for (Eigen::Index b = a; b < n; ++b) {
                cov(a, b) = kernel(p, grid.point(static_cast<std::size_t>(b)));
            }
        } catch (...) {
#pragma omp critical(oufield_cov_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a + 1; b < n; ++b) cov(b, a) = cov(a, b);
    }
    return cov;
}

Eigen::MatrixXd axis_covariance_matrix(const AxisKernel& axis, const std::vector<double>& points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            const double v = eval_axis(axis, points[static_cast<std::size_t>(a)], points[static_cast<std::size_t>(b)]);
            cov(a, b) = v;
            cov(b, a) = v;
        }
    }
    return cov;
}

}  // namespace oufield
