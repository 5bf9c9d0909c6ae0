#pragma once

#include <cstddef>
#include <vector>

namespace oufield {

/// A point (s, t) of the plane.
struct Point {
    double s = 0.0;
    double t = 0.0;
};

/// Rectangular grid {s_i} x {t_j}. Flattened indices are row-major in (i, j).
struct GridSpec {
    std::vector<double> s_points;
    std::vector<double> t_points;
    /// When set, points on a field's zero set are allowed and carried as
    /// exact zeros; otherwise every point must be strictly interior.
    bool include_boundary = false;

    std::size_t ns() const noexcept { return s_points.size(); }
    std::size_t nt() const noexcept { return t_points.size(); }
    std::size_t size() const noexcept { return ns() * nt(); }

    std::size_t flat(std::size_t i, std::size_t j) const noexcept { return i * nt() + j; }
    Point point(std::size_t flat_index) const {
        return {s_points[flat_index / nt()], t_points[flat_index % nt()]};
    }

    /// Throws DomainError unless both point lists are non-empty, finite and
    /// strictly increasing.
    void validate() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// n equally spaced points on [lo, hi]; n == 1 yields the midpoint.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// n equally spaced points on [margin * extent, (1 - margin) * extent].
std::vector<double> interior_points(double extent, std::size_t n, double margin);

}  // namespace oufield
