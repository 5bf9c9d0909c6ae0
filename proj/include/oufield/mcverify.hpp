#pragma once

// Statistical verification: empirical covariances of replicated samples and
// second-moment gates against analytic kernels.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oufield/kernels.hpp"
#include "oufield/report.hpp"
#include "oufield/sampling.hpp"

namespace oufield {

struct EmpiricalCovariance {
    std::shared_ptr<const GridSpec> grid;
    Eigen::VectorXd mean;
    /// Unbiased (divisor n - 1), row-major point order like covariance_matrix.
    Eigen::MatrixXd cov;
    std::size_t n = 0;
};

/// Replicates per accumulation chunk. Chunk partial sums are merged in chunk
/// order, so the result does not depend on the thread count.
inline constexpr std::size_t kAccumulationChunk = 512;

EmpiricalCovariance empirical_covariance(const std::vector<FieldSample>& samples);
/// Plain sequential two-pass reference for empirical_covariance.
EmpiricalCovariance empirical_covariance_serial(const std::vector<FieldSample>& samples);

inline constexpr double kGateSigmas = 3.0;
inline constexpr double kGateFraction = 0.95;

/// Entry (a, b) passes when |emp - c| <= sigmas * sqrt((c_aa c_bb + c_ab^2) / n)
/// with c the target; mean entry a passes when |mean_a| <= sigmas * sqrt(c_aa / n).
/// The gate passes when at least 95% of the upper-triangle and mean entries,
/// counted together, pass. n_entries_* in the report count covariance entries.
VerificationReport covariance_gate(const EmpiricalCovariance& emp, const Eigen::MatrixXd& target,
                                   double confidence_sigmas = kGateSigmas, const std::string& name = "covariance");
VerificationReport covariance_gate(const EmpiricalCovariance& emp, const Kernel2D& target,
                                   double confidence_sigmas = kGateSigmas);

/// Two OU batches on grids that differ by a common shift, both compared with
/// the single analytic matrix evaluated on the first grid, and with each other.
VerificationReport ou_stationarity_gate(const EmpiricalCovariance& a, const EmpiricalCovariance& b,
                                        const Eigen::MatrixXd& target, double confidence_sigmas = kGateSigmas);
VerificationReport ou_stationarity_gate(const EmpiricalCovariance& a, const EmpiricalCovariance& b,
                                        const OUParams& params, double confidence_sigmas = kGateSigmas);

/// Throws DomainError unless the two grids are translates of each other.
Point grid_shift(const GridSpec& a, const GridSpec& b);

}  // namespace oufield
