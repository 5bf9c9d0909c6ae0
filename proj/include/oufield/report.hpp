#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "json.hpp"

namespace oufield {

/// Outcome of one identity, Monte Carlo, or falsifier check.
struct VerificationReport {
    std::string check_name;
    bool passed = false;
    double max_residual = 0.0;
    std::string residual_location;
    std::size_t n_entries_tested = 0;
    std::size_t n_entries_outside_band = 0;
    /// Absolute tolerance for identity checks, sigma multiplier for gates.
    double tolerance = 0.0;
    std::map<std::string, std::string> metadata;
};

nlohmann::json to_json(const VerificationReport& report);

}  // namespace oufield
