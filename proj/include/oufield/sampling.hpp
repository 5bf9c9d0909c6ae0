#pragma once

// Exact Gaussian sampling of catalog fields on rectangular grids.
//
// Three routes are provided:
//   * dense:      Cholesky factor of the full (n_s n_t)^2 covariance;
//   * kronecker:  separate axis factors, X = sqrt(scale) L_s Z L_t^T;
//   * via wiener: a standard Wiener field drawn on transformed grid points
//                 and rescaled pointwise (the space-domain representations).
//
// Replicate k uses the normals stream_normal(seed, k, point), so outputs do
// not depend on the thread count or on the order replicates are produced.

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oufield/grid.hpp"
#include "oufield/kernels.hpp"
#include "oufield/transforms.hpp"

namespace oufield {

struct Factorization {
    Eigen::MatrixXd lower;
    double jitter = 0.0;
};

/// Cholesky factor of cov + jitter I. Jitter starts at 0, then
/// 1e-12 trace/n, growing tenfold up to 1e-8 trace/n. Throws NotPsdError
/// naming the failing leading minor if the last attempt fails.
Factorization factorize(const Eigen::MatrixXd& cov);

/// Like factorize, but rows with an exactly zero diagonal are excluded from
/// the factorization and come back as zero rows (a zero-variance Gaussian
/// coordinate is identically zero).
Factorization factorize_masked(const Eigen::MatrixXd& cov);

struct FieldSample {
    std::shared_ptr<const GridSpec> grid;
    /// values(i, j) is the field at (s_i, t_j).
    Eigen::MatrixXd values;
    std::uint64_t seed = 0;
    std::uint64_t replicate_index = 0;
};

/// Throws DomainError if a grid point lies outside the kernel's domain, or on
/// its zero set while include_boundary is unset.
void validate_grid_for(const Kernel2D& kernel, const GridSpec& grid);

std::vector<FieldSample> sample_dense(const Kernel2D& kernel, const GridSpec& grid, std::uint64_t seed,
                                      std::size_t n_replicates);

struct KroneckerFactors {
    Eigen::MatrixXd s_lower;
    Eigen::MatrixXd t_lower;
    double scale = 1.0;
    double s_jitter = 0.0;
    double t_jitter = 0.0;
};

KroneckerFactors kronecker_factors(const AxisKernel& s_axis, const AxisKernel& t_axis, double scale,
                                   const GridSpec& grid);
/// scale (L_s L_s^T) kron (L_t L_t^T), ordered like covariance_matrix.
Eigen::MatrixXd reconstruct_covariance(const KroneckerFactors& factors);

std::vector<FieldSample> sample_kronecker(const AxisKernel& s_axis, const AxisKernel& t_axis, double scale,
                                          const GridSpec& grid, std::uint64_t seed, std::size_t n_replicates);
/// Convenience overload; throws DomainError for non-separable kernels.
std::vector<FieldSample> sample_kronecker(const Kernel2D& kernel, const GridSpec& grid, std::uint64_t seed,
                                          std::size_t n_replicates);

/// Stationary OU field through Z(s,t) = sigma/(2 sqrt(alpha beta)) e^{-alpha s - beta t} W(e^{2 alpha s}, e^{2 beta t}).
std::vector<FieldSample> sample_ou_via_wiener(const OUParams& params, const GridSpec& grid, std::uint64_t seed,
                                              std::size_t n_replicates);

/// Largest image-grid coordinate accepted by sample_bridge_via_wiener.
inline constexpr double kMaxImageCoordinate = 1e12;

/// U(s,t) = scale(s,t) W(f(s), f~(t)) with W drawn exactly on the image grid
/// from independent rectangle increments.
std::vector<FieldSample> sample_bridge_via_wiener(const OURepresentation& rep, const GridSpec& grid,
                                                  std::uint64_t seed, std::size_t n_replicates);

/// Standard Wiener field on an increasing positive grid from independent
/// increments; `seed`/`replicate` select the stream. Exposed for testing.
Eigen::MatrixXd wiener_from_increments(const std::vector<double>& u, const std::vector<double>& v, std::uint64_t seed,
                                       std::uint64_t replicate);

/// CSV export: '#' metadata lines, a column header, then one row per grid
/// point (row-major) holding s, t and one column per replicate.
void write_samples_csv(std::ostream& out, const GridSpec& grid, const std::vector<FieldSample>& samples,
                       const std::map<std::string, std::string>& metadata);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

}  // namespace oufield
