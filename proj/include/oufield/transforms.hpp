#pragma once

// Space-domain transforms that represent catalog fields as
//
//     U(s, t) = sqrt(g(s) g~(t)) X(ln f(s), ln f~(t))
//
// for a stationary Ornstein-Uhlenbeck field X, together with the induced
// covariance, its reduced Wiener-field form, and deterministic checks that the
// induced and target kernels agree.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oufield/grid.hpp"
#include "oufield/kernels.hpp"
#include "oufield/report.hpp"

namespace oufield {

/// A scale function g and a domain function f on the open interval (0, L).
struct AxisTransform {
    std::string name;
    /// Right endpoint L of the open domain; may be +infinity.
    double length = 1.0;
    std::function<double(double)> g;
    std::function<double(double)> f;
    /// Closed form of lim f(x) as x -> L; +infinity when f diverges.
    double limit_at_length = std::numeric_limits<double>::infinity();

    bool interior(double x) const { return x > 0.0 && x < length; }
    /// g and f with an interior check; throws DomainError outside (0, L).
    double scale_at(double x) const;
    double domain_at(double x) const;
};

struct OURepresentation {
    std::string name;
    AxisTransform s_transform;
    AxisTransform t_transform;
    OUParams ou = kStandardOU;
};

/// g(s) = s(1 - s), f(s) = s / (1 - s) on (0, 1).
AxisTransform bridge_axis_transform();
/// g(t) = t, f(t) = t on (0, inf).
AxisTransform wiener_axis_transform();
/// Scaled Wiener bridge axis with horizon S and parameter alpha.
AxisTransform transform_scaled(double S, double alpha);
/// g = F(1 - F), f = F / (1 - F) on (0, S_F).
AxisTransform cdf_axis_transform(const CdfSpec& F);

OURepresentation transform_tied_down();
OURepresentation transform_scaled_field(double S, double alpha, double T, double beta);
OURepresentation transform_kiefer();
OURepresentation transform_fg(const CdfSpec& F, const CdfSpec& G);

/// Covariance of the represented field at two interior points.
double induced_covariance(const OURepresentation& rep, Point p, Point q);

/// U(s, t) = scale * W(u, v) for a standard Wiener field W.
struct ReducedForm {
    double scale = 0.0;
    double u = 0.0;
    double v = 0.0;
};

ReducedForm reduced_wiener_form(const OURepresentation& rep, Point p);

inline constexpr double kIdentityTolerance = 1e-10;

/// Max-abs comparison of induced_covariance against `target` over every pair
/// of grid points. The grid must be strictly interior to the representation.
VerificationReport identity_check(const OURepresentation& rep, const Kernel2D& target, const GridSpec& grid,
                                  double tol = kIdentityTolerance);

/// True iff f increases strictly on `n` equally spaced interior points.
bool strictly_increasing_on(const AxisTransform& transform, std::size_t n = 512);

// Separability falsifier ----------------------------------------------------

struct FalsifierResult {
    Eigen::VectorXd singular_values;
    double largest = 0.0;
    double second = 0.0;
    bool not_separable = false;

    std::string verdict() const { return not_separable ? "not separable" : "separable"; }
};

/// Rank test on an arbitrary matrix: "not separable" iff the second singular
/// value exceeds 1e-8 times the largest.
FalsifierResult rank_falsifier(const Eigen::MatrixXd& m);

/// Rank test on the residual factor 1 - s_i t_j that a product-form
/// representation of the bivariate bridge would have to factor as a(s) b(t).
/// Both lists must be strictly increasing, in [1/2, 1], with at least two points.
FalsifierResult separability_falsifier(const std::vector<double>& grid_s, const std::vector<double>& grid_t);

/// The function G(s2) (normalized to 1 at s2 = 1/2) that a product-form
/// representation of the bivariate bridge would force, read off the slice
/// s1 = t1 = 1/2 at fixed t2. Distinct t2 giving distinct curves is the
/// contradiction.
double bivariate_slice_candidate(double t2, double s2);

}  // namespace oufield
