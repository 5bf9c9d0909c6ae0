#pragma once

// Command-line front end: configuration, the field catalog it selects from,
// and the kernel / sample / verify commands.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oufield/grid.hpp"
#include "oufield/kernels.hpp"
#include "oufield/transforms.hpp"

namespace oufield::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
    std::string command;  // kernel | sample | verify
    std::string action;   // eval | matrix, or identity | montecarlo | falsify | all
    std::string family = "tied-down";
    double alpha = 0.5;
    double beta = 0.5;
    double sigma = 1.0;
    double S = 1.0;
    double T = 1.0;
    std::string cdf = "exponential";
    double rate = 1.0;
    /// Point count ("6") or explicit comma-separated list ("0.1,0.5,0.9").
    std::optional<std::string> grid_s;
    std::optional<std::string> grid_t;
    double margin = 1e-3;
    bool include_boundary = false;
    std::vector<double> points;
    std::uint64_t seed = 42;
    std::optional<std::size_t> replicates;
    double tol = kIdentityTolerance;
    int threads = 0;
    std::string out;
    std::string path = "auto";

    /// Throws DomainError naming the violated constraint.
    void validate() const;
};

/// One catalog entry resolved from a configuration.
struct FieldSpec {
    Kernel2D kernel;
    std::optional<OURepresentation> representation;
    std::optional<OUParams> ou;
    /// Nominal [lower, upper] extent of each axis used to lay out grids.
    double s_lower = 0.0, s_upper = 1.0;
    double t_lower = 0.0, t_upper = 1.0;
    std::string parameters;
};

FieldSpec make_field(const RunConfig& config);
CdfSpec make_cdf(const RunConfig& config);

/// Grid for a field: counts are laid out inside the nominal extent with the
/// configured margin (OU fields use the closed extent); lists are used as given.
GridSpec make_grid(const FieldSpec& field, const std::string& s_spec, const std::string& t_spec, double margin,
                   bool include_boundary);

int cmd_kernel_eval(const RunConfig& config, std::ostream& out);
int cmd_kernel_matrix(const RunConfig& config, std::ostream& out);
int cmd_sample(const RunConfig& config, std::ostream& out);

/// Runs one verification suite and returns {"suite", "pass", "reports", "metadata"}.
nlohmann::json run_verify_suite(const RunConfig& config);
int cmd_verify(const RunConfig& config, std::ostream& out);

/// Full argument parsing and dispatch; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oufield::cli
