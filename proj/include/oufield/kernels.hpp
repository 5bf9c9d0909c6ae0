#pragma once

// Closed-form covariance kernels for the planar Gaussian field catalog:
// Wiener field, stationary Ornstein-Uhlenbeck field, bivariate and tied-down
// Wiener bridges, tied-down scaled Wiener bridges, the Kiefer process and
// (F,G)-Wiener bridges.
//
// Every kernel canonicalizes each coordinate pair (smaller value first)
// before evaluation, so k(p, q) and k(q, p) execute the same floating-point
// operations and are bitwise equal. Bridge-type kernels return an exact 0.0
// on their zero sets instead of evaluating a limiting formula.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "oufield/grid.hpp"

namespace oufield {

/// Parameters (alpha, beta, sigma) of a stationary Ornstein-Uhlenbeck field.
struct OUParams {
    double alpha = 0.5;
    double beta = 0.5;
    double sigma = 1.0;

    /// Throws DomainError unless all three parameters are positive and finite.
    void validate() const;
    /// sigma^2 / (4 alpha beta), the variance at zero lag.
    double stationary_variance() const { return sigma * sigma / (4.0 * alpha * beta); }
};

/// The parameters of every space-domain representation in the catalog.
inline constexpr OUParams kStandardOU{0.5, 0.5, 1.0};

/// A cumulative distribution function on [0, inf) used by (F,G)-bridges.
///
/// The horizon is inf{s : F(s) = 1}, possibly +infinity. Monotonicity is
/// spot-checked at construction on 64 pseudo-random ordered pairs.
class CdfSpec {
  public:
    using Fn = std::function<double(double)>;

    static CdfSpec make(std::string name, Fn cdf, double horizon, Fn density = {});
    /// F(s) = s on [0, 1].
    static CdfSpec uniform();
    /// F(s) = 1 - exp(-rate s) on [0, inf).
    static CdfSpec exponential(double rate);

    double operator()(double s) const { return cdf_(s); }
    double horizon() const noexcept { return horizon_; }
    const std::string& name() const noexcept { return name_; }
    bool has_density() const noexcept { return static_cast<bool>(density_); }
    double density(double s) const { return density_(s); }

  private:
    CdfSpec(std::string name, Fn cdf, double horizon, Fn density)
        : name_(std::move(name)), cdf_(std::move(cdf)), horizon_(horizon), density_(std::move(density)) {}

    std::string name_;
    Fn cdf_;
    double horizon_;
    Fn density_;
};

// Axis kernels -------------------------------------------------------------

/// min(a, b) on [0, inf).
struct WienerAxis {};
/// min(a, b) - a b on [0, 1].
struct BridgeAxis {};
/// Scaled Wiener bridge covariance on [0, horizon] with drift strength alpha.
struct ScaledBridgeAxis {
    double horizon = 1.0;
    double alpha = 1.0;
};
/// exp(-rate |a - b|) on the real line.
struct OUAxis {
    double rate = 0.5;
};
/// F(min(a, b)) - F(a) F(b) on [0, horizon of F).
struct CdfBridgeAxis {
    CdfSpec cdf;
};

using AxisKernel = std::variant<WienerAxis, BridgeAxis, ScaledBridgeAxis, OUAxis, CdfBridgeAxis>;

/// Closed interval bounds of an axis domain; `upper_open` marks [lower, upper).
struct AxisDomain {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool upper_open = false;

    bool contains(double x) const {
        return x >= lower && (upper_open ? x < upper : x <= upper);
    }
};

AxisDomain axis_domain(const AxisKernel& axis);
std::string axis_name(const AxisKernel& axis);
double eval_axis(const AxisKernel& axis, double a, double b);
/// Throws DomainError if a or b lies outside the axis domain.
void check_axis_domain(const AxisKernel& axis, double a, const char* coordinate);

// Planar kernels -----------------------------------------------------------

struct SeparableKernel {
    AxisKernel s_axis;
    AxisKernel t_axis;
    double scale = 1.0;
};

/// The bivariate Wiener bridge; not of product type.
struct BivariateBridgeKernel {};

class Kernel2D {
  public:
    Kernel2D(std::string name, SeparableKernel k) : name_(std::move(name)), impl_(std::move(k)) {}
    Kernel2D(std::string name, BivariateBridgeKernel k) : name_(std::move(name)), impl_(k) {}

    double operator()(Point p, Point q) const;
    const std::string& name() const noexcept { return name_; }
    const SeparableKernel* separable() const noexcept { return std::get_if<SeparableKernel>(&impl_); }
    AxisDomain s_domain() const;
    AxisDomain t_domain() const;

  private:
    std::string name_;
    std::variant<SeparableKernel, BivariateBridgeKernel> impl_;
};

Kernel2D wiener_kernel();
Kernel2D ou_kernel(const OUParams& params);
Kernel2D bivariate_bridge_kernel();
Kernel2D tied_down_kernel();
Kernel2D scaled_bridge_kernel(double S, double alpha, double T, double beta);
Kernel2D kiefer_kernel();
Kernel2D fg_bridge_kernel(const CdfSpec& F, const CdfSpec& G);

// Pointwise closed forms ---------------------------------------------------

double eval_wiener(Point p, Point q);
double eval_ou(const OUParams& params, Point p, Point q);
double eval_bivariate_bridge(Point p, Point q);
double eval_tied_down_bridge(Point p, Point q);
double eval_scaled_bridge_axis(double S, double alpha, double s1, double s2);
/// s in [0, 1], t >= 0.
double eval_kiefer(Point p, Point q);
double eval_fg_bridge(const CdfSpec& F, const CdfSpec& G, Point p, Point q);

/// (x^eps - y^eps) / eps for 0 < y <= x, continuous through eps = 0 where it
/// equals ln(x / y).
double pow_diff_quotient(double x, double y, double eps);

// Grid assembly ------------------------------------------------------------

/// Covariance matrix over all grid points, row-major in (i, j). Rows are
/// assembled in parallel; each unordered pair is evaluated once and mirrored.
Eigen::MatrixXd covariance_matrix(const Kernel2D& kernel, const GridSpec& grid);
/// Single-threaded reference for covariance_matrix.
Eigen::MatrixXd covariance_matrix_serial(const Kernel2D& kernel, const GridSpec& grid);
/// Covariance matrix of one axis kernel over a point list.
Eigen::MatrixXd axis_covariance_matrix(const AxisKernel& axis, const std::vector<double>& points);

}  // namespace oufield
