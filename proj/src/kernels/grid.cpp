#include "oufield/grid.hpp"

#include <cmath>
#include <string>

#include "oufield/errors.hpp"

namespace oufield {

namespace {

void check_axis(const std::vector<double>& pts, const char* name) {
    if (pts.empty()) {
        throw DomainError(std::string("grid axis ") + name + " is empty");
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!std::isfinite(pts[i])) {
            throw DomainError(std::string("grid axis ") + name + " has a non-finite point");
        }
        if (i > 0 && !(pts[i] > pts[i - 1])) {
            throw DomainError(std::string("grid axis ") + name +
                              " must be strictly increasing (index " + std::to_string(i) + ")");
        }
    }
}

}  // namespace

void GridSpec::validate() const {
    check_axis(s_points, "s");
    check_axis(t_points, "t");
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = 0.5 * (lo + hi);
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + step * static_cast<double>(i);
    }
    if (n > 1) out[n - 1] = hi;
    return out;
}

std::vector<double> interior_points(double extent, std::size_t n, double margin) {
    if (!(margin > 0.0) || !(margin < 0.5)) {
        throw DomainError("grid margin must lie in (0, 0.5)");
    }
    return linspace(margin * extent, (1.0 - margin) * extent, n);
}

}  // namespace oufield
