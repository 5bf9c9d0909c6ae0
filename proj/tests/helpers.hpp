#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oufield/grid.hpp"

namespace testutil {

inline oufield::GridSpec grid(std::vector<double> s, std::vector<double> t, bool boundary = false) {
    oufield::GridSpec g;
    g.s_points = std::move(s);
    g.t_points = std::move(t);
    g.include_boundary = boundary;
    return g;
}

inline oufield::GridSpec interior_grid(double s_extent, double t_extent, std::size_t ns, std::size_t nt,
                                       double margin = 1e-3) {
    return grid(oufield::interior_points(s_extent, ns, margin), oufield::interior_points(t_extent, nt, margin));
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

inline bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a.data()[i] != b.data()[i] || std::signbit(a.data()[i]) != std::signbit(b.data()[i])) return false;
    }
    return true;
}

/// Composite Gauss-Legendre (5 nodes) in long double.
template <class Fn>
long double integrate(Fn fn, long double a, long double b, int panels = 2000) {
    static const long double x[5] = {0.0L, 0.538469310105683091036314420700208805L, -0.538469310105683091036314420700208805L,
                                     0.906179845938663992797626878299392965L, -0.906179845938663992797626878299392965L};
    static const long double w[5] = {0.568888888888888888888888888888888889L, 0.478628670499366468041291514835638192L,
                                     0.478628670499366468041291514835638192L, 0.236926885056189087514264040719917363L,
                                     0.236926885056189087514264040719917363L};
    const long double h = (b - a) / panels;
    long double total = 0.0L;
    for (int p = 0; p < panels; ++p) {
        const long double mid = a + (p + 0.5L) * h;
        for (int k = 0; k < 5; ++k) total += w[k] * fn(mid + 0.5L * h * x[k]);
    }
    return total * 0.5L * h;
}

}  // namespace testutil
