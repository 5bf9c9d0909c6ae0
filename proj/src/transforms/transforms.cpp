#include "oufield/transforms.hpp"

#include <cmath>
#include <exception>
#include <sstream>
#include <utility>

#include "oufield/errors.hpp"

namespace oufield {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

std::string point_str(Point p) { return "(" + fmt(p.s) + ", " + fmt(p.t) + ")"; }

void check_interior(const AxisTransform& tr, double x, const char* coordinate) {
    if (!tr.interior(x)) {
        throw DomainError(tr.name + ": " + coordinate + " = " + fmt(x) + " is not inside (0, " + fmt(tr.length) +
                          ")");
    }
}

}  // namespace

double AxisTransform::scale_at(double x) const {
    check_interior(*this, x, "argument");
    return g(x);
}

double AxisTransform::domain_at(double x) const {
    check_interior(*this, x, "argument");
    return f(x);
}

AxisTransform bridge_axis_transform() {
    return {"bridge", 1.0, [](double s) { return s * (1.0 - s); }, [](double s) { return s / (1.0 - s); }, kInf};
}

AxisTransform wiener_axis_transform() {
    return {"wiener", kInf, [](double t) { return t; }, [](double t) { return t; }, kInf};
}

AxisTransform transform_scaled(double S, double alpha) {
    if (!(S > 0.0) || !std::isfinite(S)) throw DomainError("scaled transform: S must be positive and finite");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("scaled transform: alpha must be positive");
    AxisTransform tr;
    tr.name = "scaled(S=" + fmt(S) + ",alpha=" + fmt(alpha) + ")";
    tr.length = S;
    if (alpha == 0.5) {
        tr.g = [S](double s) { return (S - s) * std::log(S / (S - s)); };
        tr.f = [S](double s) { return S * std::log(S / (S - s)); };
        tr.limit_at_length = kInf;
        return tr;
    }
    const double eps = 1.0 - 2.0 * alpha;
    const double s_pow = std::pow(S, 2.0 * alpha);
    tr.g = [S, alpha, eps](double s) { return std::pow(S - s, 2.0 * alpha) * pow_diff_quotient(S, S - s, eps); };
    tr.f = [S, eps, s_pow](double s) { return s_pow * pow_diff_quotient(S, S - s, eps); };
    tr.limit_at_length = alpha < 0.5 ? S / eps : kInf;
    return tr;
}

AxisTransform cdf_axis_transform(const CdfSpec& F) {
    return {"cdf(" + F.name() + ")", F.horizon(),
            [F](double s) {
                const double v = F(s);
                return v * (1.0 - v);
            },
            [F](double s) {
                const double v = F(s);
                return v / (1.0 - v);
            },
            kInf};
}

OURepresentation transform_tied_down() {
    return {"tied-down", bridge_axis_transform(), bridge_axis_transform(), kStandardOU};
}

OURepresentation transform_scaled_field(double S, double alpha, double T, double beta) {
    return {"scaled", transform_scaled(S, alpha), transform_scaled(T, beta), kStandardOU};
}

OURepresentation transform_kiefer() {
    return {"kiefer", bridge_axis_transform(), wiener_axis_transform(), kStandardOU};
}

OURepresentation transform_fg(const CdfSpec& F, const CdfSpec& G) {
    return {"fg", cdf_axis_transform(F), cdf_axis_transform(G), kStandardOU};
}

double induced_covariance(const OURepresentation& rep, Point p, Point q) {
    rep.ou.validate();
    const AxisTransform& ts = rep.s_transform;
    const AxisTransform& tt = rep.t_transform;
    check_interior(ts, p.s, "s");
    check_interior(ts, q.s, "s");
    check_interior(tt, p.t, "t");
    check_interior(tt, q.t, "t");
    // Canonical order per axis keeps the result bitwise symmetric.
    const double s_lo = std::min(p.s, q.s), s_hi = std::max(p.s, q.s);
    const double t_lo = std::min(p.t, q.t), t_hi = std::max(p.t, q.t);
    const double amplitude = std::sqrt(ts.g(s_lo) * ts.g(s_hi) * tt.g(t_lo) * tt.g(t_hi));
    const double ds = std::abs(std::log(ts.f(s_hi)) - std::log(ts.f(s_lo)));
    const double dt = std::abs(std::log(tt.f(t_hi)) - std::log(tt.f(t_lo)));
    return amplitude * rep.ou.stationary_variance() * std::exp(-rep.ou.alpha * ds - rep.ou.beta * dt);
}

ReducedForm reduced_wiener_form(const OURepresentation& rep, Point p) {
    rep.ou.validate();
    const double gs = rep.s_transform.scale_at(p.s);
    const double gt = rep.t_transform.scale_at(p.t);
    const double fs = rep.s_transform.domain_at(p.s);
    const double ft = rep.t_transform.domain_at(p.t);
    const auto& ou = rep.ou;
    // X(a, b) = sigma / (2 sqrt(alpha beta)) e^{-alpha a - beta b} W(e^{2 alpha a}, e^{2 beta b})
    // evaluated at a = ln f(s), b = ln f~(t).
    const double ou_factor = ou.sigma / (2.0 * std::sqrt(ou.alpha * ou.beta));
    ReducedForm out;
    if (ou.alpha == 0.5 && ou.beta == 0.5) {
        out.scale = ou_factor * std::sqrt(gs * gt / (fs * ft));
        out.u = fs;
        out.v = ft;
    } else {
        out.scale = ou_factor * std::sqrt(gs * gt) * std::pow(fs, -ou.alpha) * std::pow(ft, -ou.beta);
        out.u = std::pow(fs, 2.0 * ou.alpha);
        out.v = std::pow(ft, 2.0 * ou.beta);
    }
    return out;
}

VerificationReport identity_check(const OURepresentation& rep, const Kernel2D& target, const GridSpec& grid,
                                  double tol) {
    VerificationReport report;
    report.check_name = "identity:" + rep.name + "-vs-" + target.name();
    report.tolerance = tol;
    report.metadata["grid"] = std::to_string(grid.ns()) + "x" + std::to_string(grid.nt());
    try {
        grid.validate();
        for (double s : grid.s_points) check_interior(rep.s_transform, s, "grid s");
        for (double t : grid.t_points) check_interior(rep.t_transform, t, "grid t");
    } catch (const std::exception& e) {
        report.passed = false;
        report.max_residual = kInf;
        report.residual_location = e.what();
        return report;
    }

    const auto n = static_cast<std::ptrdiff_t>(grid.size());
    std::vector<double> row_max(static_cast<std::size_t>(n), 0.0);
    std::vector<std::ptrdiff_t> row_arg(static_cast<std::size_t>(n), 0);
    std::vector<std::string> row_error(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        row_arg[ua] = a;
        try {
            const Point p = grid.point(ua);
            for (std::ptrdiff_t b = a; b < n; ++b) {
                const Point q = grid.point(static_cast<std::size_t>(b));
                const double r = std::abs(induced_covariance(rep, p, q) - target(p, q));
                // NaN residuals must register as failures.
                if (r > row_max[ua] || std::isnan(r)) {
                    row_max[ua] = std::isnan(r) ? kInf : r;
                    row_arg[ua] = b;
                }
            }
        } catch (const std::exception& e) {
            row_error[ua] = e.what();
        }
    }

    double worst = 0.0;
    std::ptrdiff_t worst_a = 0, worst_b = 0;
    for (std::ptrdiff_t a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        if (!row_error[ua].empty()) {
            report.passed = false;
            report.max_residual = kInf;
            report.residual_location = "row " + std::to_string(a) + ": " + row_error[ua];
            report.n_entries_tested = static_cast<std::size_t>(n * (n + 1) / 2);
            return report;
        }
        if (row_max[ua] > worst) {
            worst = row_max[ua];
            worst_a = a;
            worst_b = row_arg[ua];
        }
    }
    report.max_residual = worst;
    report.residual_location = point_str(grid.point(static_cast<std::size_t>(worst_a))) + " x " +
                               point_str(grid.point(static_cast<std::size_t>(worst_b)));
    report.n_entries_tested = static_cast<std::size_t>(n * (n + 1) / 2);
    report.passed = worst <= tol;
    report.n_entries_outside_band = report.passed ? 0 : 1;
    if (!report.passed) {
        // Count every offending pair for the report; this path is rare.
        std::size_t bad = 0;
        for (std::ptrdiff_t a = 0; a < n; ++a) {
            for (std::ptrdiff_t b = a; b < n; ++b) {
                const Point p = grid.point(static_cast<std::size_t>(a));
                const Point q = grid.point(static_cast<std::size_t>(b));
                if (!(std::abs(induced_covariance(rep, p, q) - target(p, q)) <= tol)) ++bad;
            }
        }
        report.n_entries_outside_band = bad;
    }
    return report;
}

bool strictly_increasing_on(const AxisTransform& transform, std::size_t n) {
    const double extent = std::isinf(transform.length) ? 10.0 : transform.length;
    double prev = -kInf;
    for (std::size_t k = 1; k <= n; ++k) {
        const double x = extent * static_cast<double>(k) / static_cast<double>(n + 1);
        const double v = transform.domain_at(x);
        if (!(v > prev)) return false;
        prev = v;
    }
    return true;
}

// Falsifier ----------------------------------------------------------------

FalsifierResult rank_falsifier(const Eigen::MatrixXd& m) {
    FalsifierResult out;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    out.singular_values = svd.singularValues();
    out.largest = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
    out.second = out.singular_values.size() > 1 ? out.singular_values(1) : 0.0;
    out.not_separable = out.second > 1e-8 * out.largest;
    return out;
}

FalsifierResult separability_falsifier(const std::vector<double>& grid_s, const std::vector<double>& grid_t) {
    auto check = [](const std::vector<double>& pts, const char* name) {
        if (pts.size() < 2) throw DomainError(std::string("falsifier: ") + name + " grid needs at least 2 points");
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!(pts[i] >= 0.5 && pts[i] <= 1.0)) {
                throw DomainError(std::string("falsifier: ") + name + " point " + fmt(pts[i]) + " outside [1/2, 1]");
            }
            if (i > 0 && !(pts[i] > pts[i - 1])) {
                throw DomainError(std::string("falsifier: ") + name + " grid is degenerate (repeated or unsorted)");
            }
        }
    };
    check(grid_s, "s");
    check(grid_t, "t");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(grid_s.size()), static_cast<Eigen::Index>(grid_t.size()));
    for (std::size_t i = 0; i < grid_s.size(); ++i) {
        for (std::size_t j = 0; j < grid_t.size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 - grid_s[i] * grid_t[j];
        }
    }
    return rank_falsifier(m);
}

double bivariate_slice_candidate(double t2, double s2) {
    // With s1 = t1 = 1/2 <= s2, t2 the bivariate bridge covariance divided by
    // s1 t1 is the residual factor 1 - s2 t2.
    constexpr Point anchor{0.5, 0.5};
    auto residual = [&](double s) { return eval_bivariate_bridge(anchor, {s, t2}) / (anchor.s * anchor.t); };
    const double norm = residual(0.5);
    if (norm == 0.0) throw DomainError("slice candidate: degenerate normalization");
    return residual(s2) / norm;
}

}  // namespace oufield
