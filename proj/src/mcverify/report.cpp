#include "oufield/report.hpp"

#include <cmath>

namespace oufield {

nlohmann::json to_json(const VerificationReport& report) {
    nlohmann::json j;
    j["check_name"] = report.check_name;
    j["pass"] = report.passed;
    // JSON has no infinity; an unbounded residual is written as null.
    if (std::isfinite(report.max_residual)) {
        j["max_residual"] = report.max_residual;
    } else {
        j["max_residual"] = nullptr;
    }
    j["residual_location"] = report.residual_location;
    j["n_entries_tested"] = report.n_entries_tested;
    j["n_entries_outside_band"] = report.n_entries_outside_band;
    j["tolerance"] = report.tolerance;
    j["metadata"] = report.metadata;
    return j;
}

}  // namespace oufield
