#include "oufield/sampling.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "oufield/errors.hpp"
#include "oufield/rng.hpp"

namespace oufield {

namespace {

// A zero-variance coordinate can come out of L z as -0.0; store +0.0.
void clear_negative_zeros(Eigen::MatrixXd& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        if (m.data()[k] == 0.0) m.data()[k] = 0.0;
    }
}

std::shared_ptr<const GridSpec> share(const GridSpec& grid) { return std::make_shared<const GridSpec>(grid); }

std::vector<FieldSample> allocate(const std::shared_ptr<const GridSpec>& grid, std::uint64_t seed, std::size_t n) {
    std::vector<FieldSample> out(n);
    for (std::size_t r = 0; r < n; ++r) {
        out[r].grid = grid;
        out[r].seed = seed;
        out[r].replicate_index = r;
    }
    return out;
}

void check_axis_points(const AxisDomain& dom, const std::vector<double>& pts, const char* coordinate) {
    for (double x : pts) {
        if (!dom.contains(x)) {
            std::ostringstream os;
            os << "grid " << coordinate << " point " << format_double(x) << " outside the kernel domain ["
               << format_double(dom.lower) << ", " << format_double(dom.upper) << (dom.upper_open ? ")" : "]");
            throw DomainError(os.str());
        }
    }
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    if (x == 0.0) x = 0.0;  // drop the sign of -0
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void validate_grid_for(const Kernel2D& kernel, const GridSpec& grid) {
    grid.validate();
    check_axis_points(kernel.s_domain(), grid.s_points, "s");
    check_axis_points(kernel.t_domain(), grid.t_points, "t");
    if (grid.include_boundary) return;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point p = grid.point(k);
        if (kernel(p, p) == 0.0) {
            throw DomainError("grid point (" + format_double(p.s) + ", " + format_double(p.t) + ") lies on the " +
                              kernel.name() + " zero set; enable include_boundary to carry it as an exact zero");
        }
    }
}

// Dense ----------------------------------------------------------------------

std::vector<FieldSample> sample_dense(const Kernel2D& kernel, const GridSpec& grid, std::uint64_t seed,
                                      std::size_t n_replicates) {
    validate_grid_for(kernel, grid);
    auto shared = share(grid);
    auto out = allocate(shared, seed, n_replicates);
    if (n_replicates == 0) return out;

    const Factorization fac = factorize_masked(covariance_matrix(kernel, grid));
    const auto n = static_cast<Eigen::Index>(grid.size());
    const auto ns = static_cast<Eigen::Index>(grid.ns());
    const auto nt = static_cast<Eigen::Index>(grid.nt());
    const auto reps = static_cast<std::ptrdiff_t>(n_replicates);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < reps; ++r) {
        Eigen::VectorXd z(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            z(k) = stream_normal(seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(k));
        }
        const Eigen::VectorXd x = fac.lower.triangularView<Eigen::Lower>() * z;
        Eigen::MatrixXd values(ns, nt);
        for (Eigen::Index i = 0; i < ns; ++i) {
            for (Eigen::Index j = 0; j < nt; ++j) values(i, j) = x(i * nt + j);
        }
        clear_negative_zeros(values);
        out[static_cast<std::size_t>(r)].values = std::move(values);
    }
    return out;
}

// Kronecker ------------------------------------------------------------------

KroneckerFactors kronecker_factors(const AxisKernel& s_axis, const AxisKernel& t_axis, double scale,
                                   const GridSpec& grid) {
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw DomainError("kronecker: scale must be non-negative");
    grid.validate();
    const Factorization fs = factorize_masked(axis_covariance_matrix(s_axis, grid.s_points));
    const Factorization ft = factorize_masked(axis_covariance_matrix(t_axis, grid.t_points));
    return {fs.lower, ft.lower, scale, fs.jitter, ft.jitter};
}

Eigen::MatrixXd reconstruct_covariance(const KroneckerFactors& factors) {
    const Eigen::MatrixXd cs = factors.s_lower * factors.s_lower.transpose();
    const Eigen::MatrixXd ct = factors.t_lower * factors.t_lower.transpose();
    const Eigen::Index ns = cs.rows(), nt = ct.rows();
    Eigen::MatrixXd out(ns * nt, ns * nt);
    for (Eigen::Index i = 0; i < ns; ++i) {
        for (Eigen::Index k = 0; k < ns; ++k) {
            out.block(i * nt, k * nt, nt, nt) = (factors.scale * cs(i, k)) * ct;
        }
    }
    return out;
}

std::vector<FieldSample> sample_kronecker(const AxisKernel& s_axis, const AxisKernel& t_axis, double scale,
                                          const GridSpec& grid, std::uint64_t seed, std::size_t n_replicates) {
    validate_grid_for(Kernel2D("separable", SeparableKernel{s_axis, t_axis, scale}), grid);
    auto shared = share(grid);
    auto out = allocate(shared, seed, n_replicates);
    if (n_replicates == 0) return out;

    const KroneckerFactors fac = kronecker_factors(s_axis, t_axis, scale, grid);
    const double amplitude = std::sqrt(scale);
    const auto ns = static_cast<Eigen::Index>(grid.ns());
    const auto nt = static_cast<Eigen::Index>(grid.nt());
    const auto reps = static_cast<std::ptrdiff_t>(n_replicates);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < reps; ++r) {
        Eigen::MatrixXd z(ns, nt);
        for (Eigen::Index i = 0; i < ns; ++i) {
            for (Eigen::Index j = 0; j < nt; ++j) {
                z(i, j) = stream_normal(seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(i * nt + j));
            }
        }
        Eigen::MatrixXd values = amplitude * (fac.s_lower * z * fac.t_lower.transpose());
        clear_negative_zeros(values);
        out[static_cast<std::size_t>(r)].values = std::move(values);
    }
    return out;
}

std::vector<FieldSample> sample_kronecker(const Kernel2D& kernel, const GridSpec& grid, std::uint64_t seed,
                                          std::size_t n_replicates) {
    const SeparableKernel* sep = kernel.separable();
    if (sep == nullptr) throw DomainError("kronecker sampling requires a separable kernel, got " + kernel.name());
    return sample_kronecker(sep->s_axis, sep->t_axis, sep->scale, grid, seed, n_replicates);
}

// Via Wiener -----------------------------------------------------------------

std::vector<FieldSample> sample_ou_via_wiener(const OUParams& params, const GridSpec& grid, std::uint64_t seed,
                                              std::size_t n_replicates) {
    params.validate();
    grid.validate();
    GridSpec image;
    for (double s : grid.s_points) {
        if (std::abs(2.0 * params.alpha * s) > 700.0) {
            throw DomainError("ou via wiener: |2 alpha s| > 700 at s = " + format_double(s) + " (exp overflow)");
        }
        image.s_points.push_back(std::exp(2.0 * params.alpha * s));
    }
    for (double t : grid.t_points) {
        if (std::abs(2.0 * params.beta * t) > 700.0) {
            throw DomainError("ou via wiener: |2 beta t| > 700 at t = " + format_double(t) + " (exp overflow)");
        }
        image.t_points.push_back(std::exp(2.0 * params.beta * t));
    }
    // exp can collapse distinct but very close points.
    image.validate();

    std::vector<FieldSample> out = sample_dense(wiener_kernel(), image, seed, n_replicates);
    auto shared = share(grid);
    const double amplitude = params.sigma / (2.0 * std::sqrt(params.alpha * params.beta));
    const auto ns = static_cast<Eigen::Index>(grid.ns());
    const auto nt = static_cast<Eigen::Index>(grid.nt());
    Eigen::MatrixXd factor(ns, nt);
    for (Eigen::Index i = 0; i < ns; ++i) {
        for (Eigen::Index j = 0; j < nt; ++j) {
            factor(i, j) = amplitude * std::exp(-params.alpha * grid.s_points[static_cast<std::size_t>(i)] -
                                                params.beta * grid.t_points[static_cast<std::size_t>(j)]);
        }
    }
    for (auto& sample : out) {
        sample.grid = shared;
        sample.values = factor.cwiseProduct(sample.values);
    }
    return out;
}

Eigen::MatrixXd wiener_from_increments(const std::vector<double>& u, const std::vector<double>& v, std::uint64_t seed,
                                       std::uint64_t replicate) {
    const auto nu = static_cast<Eigen::Index>(u.size());
    const auto nv = static_cast<Eigen::Index>(v.size());
    Eigen::MatrixXd w(nu, nv);
    for (Eigen::Index i = 0; i < nu; ++i) {
        const double du = u[static_cast<std::size_t>(i)] - (i > 0 ? u[static_cast<std::size_t>(i - 1)] : 0.0);
        // W(i, j) = W(i - 1, j) + sum of the row-i rectangle increments up to j.
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j < nv; ++j) {
            const double dv = v[static_cast<std::size_t>(j)] - (j > 0 ? v[static_cast<std::size_t>(j - 1)] : 0.0);
            row_sum += std::sqrt(du * dv) * stream_normal(seed, replicate, static_cast<std::uint64_t>(i * nv + j));
            w(i, j) = (i > 0 ? w(i - 1, j) : 0.0) + row_sum;
        }
    }
    return w;
}

std::vector<FieldSample> sample_bridge_via_wiener(const OURepresentation& rep, const GridSpec& grid,
                                                  std::uint64_t seed, std::size_t n_replicates) {
    grid.validate();
    rep.ou.validate();

    // Split each axis into interior points and boundary points carried as zeros.
    auto classify = [&](const AxisTransform& tr, const std::vector<double>& pts, const char* coordinate) {
        std::vector<std::size_t> interior;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const double x = pts[k];
            if (tr.interior(x)) {
                interior.push_back(k);
            } else if (!(grid.include_boundary && (x == 0.0 || x == tr.length))) {
                throw DomainError(std::string("bridge via wiener: grid ") + coordinate + " point " + format_double(x) +
                                  " is not inside (0, " + format_double(tr.length) + ")" +
                                  (grid.include_boundary ? "" : "; boundary points need include_boundary"));
            }
        }
        return interior;
    };
    const auto s_active = classify(rep.s_transform, grid.s_points, "s");
    const auto t_active = classify(rep.t_transform, grid.t_points, "t");

    auto shared = share(grid);
    auto out = allocate(shared, seed, n_replicates);
    const auto ns = static_cast<Eigen::Index>(grid.ns());
    const auto nt = static_cast<Eigen::Index>(grid.nt());
    if (s_active.empty() || t_active.empty()) {
        for (auto& sample : out) sample.values = Eigen::MatrixXd::Zero(ns, nt);
        return out;
    }

    const double t_ref = grid.t_points[t_active.front()];
    const double s_ref = grid.s_points[s_active.front()];
    std::vector<double> u, v;
    auto push_image = [](std::vector<double>& dst, double value, double x, const char* coordinate) {
        if (!std::isfinite(value) || value > kMaxImageCoordinate) {
            throw DomainError(std::string("bridge via wiener: image coordinate ") + format_double(value) + " at " +
                              coordinate + " = " + format_double(x) + " exceeds " +
                              format_double(kMaxImageCoordinate) +
                              "; the domain function diverges at the horizon, use a larger grid margin");
        }
        if (!dst.empty() && !(value > dst.back())) {
            throw DomainError(std::string("bridge via wiener: image grid not strictly increasing at ") + coordinate +
                              " = " + format_double(x) + "; points are too close to resolve");
        }
        dst.push_back(value);
    };
    for (std::size_t i : s_active) {
        push_image(u, reduced_wiener_form(rep, {grid.s_points[i], t_ref}).u, grid.s_points[i], "s");
    }
    for (std::size_t j : t_active) {
        push_image(v, reduced_wiener_form(rep, {s_ref, grid.t_points[j]}).v, grid.t_points[j], "t");
    }

    Eigen::MatrixXd scale(static_cast<Eigen::Index>(s_active.size()), static_cast<Eigen::Index>(t_active.size()));
    for (std::size_t a = 0; a < s_active.size(); ++a) {
        for (std::size_t b = 0; b < t_active.size(); ++b) {
            scale(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                reduced_wiener_form(rep, {grid.s_points[s_active[a]], grid.t_points[t_active[b]]}).scale;
        }
    }

    const auto reps = static_cast<std::ptrdiff_t>(n_replicates);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < reps; ++r) {
        const Eigen::MatrixXd w = wiener_from_increments(u, v, seed, static_cast<std::uint64_t>(r));
        Eigen::MatrixXd values = Eigen::MatrixXd::Zero(ns, nt);
        for (std::size_t a = 0; a < s_active.size(); ++a) {
            for (std::size_t b = 0; b < t_active.size(); ++b) {
                const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
                values(static_cast<Eigen::Index>(s_active[a]), static_cast<Eigen::Index>(t_active[b])) =
                    scale(ia, ib) * w(ia, ib);
            }
        }
        clear_negative_zeros(values);
        out[static_cast<std::size_t>(r)].values = std::move(values);
    }
    return out;
}

// CSV ------------------------------------------------------------------------

void write_samples_csv(std::ostream& out, const GridSpec& grid, const std::vector<FieldSample>& samples,
                       const std::map<std::string, std::string>& metadata) {
    for (const auto& [key, value] : metadata) out << "# " << key << ": " << value << '\n';
    out << "s,t";
    for (std::size_t r = 0; r < samples.size(); ++r) out << ",replicate_" << samples[r].replicate_index;
    out << '\n';
    if (samples.empty()) return;
    for (std::size_t i = 0; i < grid.ns(); ++i) {
        for (std::size_t j = 0; j < grid.nt(); ++j) {
            out << format_double(grid.s_points[i]) << ',' << format_double(grid.t_points[j]);
            for (const auto& sample : samples) {
                out << ',' << format_double(sample.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            }
            out << '\n';
        }
    }
}

}  // namespace oufield
