#include "oufield/mcverify.hpp"

#include <algorithm>
#include <cmath>

#include "oufield/errors.hpp"
#include "oufield/rng.hpp"

namespace oufield {

namespace {

void check_batch(const std::vector<FieldSample>& samples) {
    if (samples.size() < 2) throw DomainError("empirical covariance needs at least 2 replicates");
    const auto& grid = samples.front().grid;
    if (!grid) throw DomainError("empirical covariance: sample without grid");
    for (const auto& s : samples) {
        if (!s.grid || !(s.grid == grid || *s.grid == *grid)) {
            throw DomainError("empirical covariance: replicates are on different grids");
        }
        if (s.values.rows() != static_cast<Eigen::Index>(grid->ns()) ||
            s.values.cols() != static_cast<Eigen::Index>(grid->nt())) {
            throw DomainError("empirical covariance: replicate dimensions do not match the grid");
        }
    }
}

// Row-major flattening, matching covariance_matrix.
Eigen::VectorXd flatten(const Eigen::MatrixXd& values) {
    Eigen::VectorXd x(values.size());
    const Eigen::Index nt = values.cols();
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < nt; ++j) x(i * nt + j) = values(i, j);
    }
    return x;
}

std::string entry_location(const GridSpec& grid, Eigen::Index a, Eigen::Index b) {
    const Point p = grid.point(static_cast<std::size_t>(a));
    const Point q = grid.point(static_cast<std::size_t>(b));
    return "(" + format_double(p.s) + ", " + format_double(p.t) + ") x (" + format_double(q.s) + ", " +
           format_double(q.t) + ")";
}

struct BandCount {
    std::size_t tested = 0;
    std::size_t outside = 0;
    double max_residual = 0.0;
    Eigen::Index arg_a = 0;
    Eigen::Index arg_b = 0;
    double max_z = 0.0;
};

// `spread` multiplies the standard error (sqrt 2 for a difference of two batches).
BandCount count_entries(const Eigen::MatrixXd& emp, const Eigen::MatrixXd& target, std::size_t n, double sigmas,
                        double spread) {
    BandCount out;
    const Eigen::Index m = target.rows();
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = a; b < m; ++b) {
            const double c = target(a, b);
            const double se = spread * std::sqrt((target(a, a) * target(b, b) + c * c) / static_cast<double>(n));
            const double r = std::abs(emp(a, b) - c);
            ++out.tested;
            if (!(r <= sigmas * se)) ++out.outside;
            if (r > out.max_residual) {
                out.max_residual = r;
                out.arg_a = a;
                out.arg_b = b;
            }
            if (se > 0.0) out.max_z = std::max(out.max_z, r / se);
        }
    }
    return out;
}

std::size_t count_mean_outside(const Eigen::VectorXd& mean, const Eigen::MatrixXd& target, std::size_t n,
                               double sigmas) {
    std::size_t outside = 0;
    for (Eigen::Index a = 0; a < mean.size(); ++a) {
        if (!(std::abs(mean(a)) <= sigmas * std::sqrt(target(a, a) / static_cast<double>(n)))) ++outside;
    }
    return outside;
}

bool fraction_ok(std::size_t outside, std::size_t tested) {
    return static_cast<double>(tested - outside) >= kGateFraction * static_cast<double>(tested);
}

}  // namespace

// Estimation -----------------------------------------------------------------

EmpiricalCovariance empirical_covariance_serial(const std::vector<FieldSample>& samples) {
    check_batch(samples);
    const std::size_t n = samples.size();
    const auto dim = static_cast<Eigen::Index>(samples.front().grid->size());
    // Data are shifted by the first replicate before averaging, so constant
    // batches give an exactly zero covariance.
    const Eigen::VectorXd origin = flatten(samples.front().values);
    Eigen::VectorXd shift_mean = Eigen::VectorXd::Zero(dim);
    for (const auto& s : samples) shift_mean += flatten(s.values) - origin;
    shift_mean /= static_cast<double>(n);
    const Eigen::VectorXd mean = origin + shift_mean;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& s : samples) {
        const Eigen::VectorXd d = (flatten(s.values) - origin) - shift_mean;
        for (Eigen::Index a = 0; a < dim; ++a) {
            for (Eigen::Index b = a; b < dim; ++b) cov(a, b) += d(a) * d(b);
        }
    }
    for (Eigen::Index a = 0; a < dim; ++a) {
        for (Eigen::Index b = a; b < dim; ++b) {
            cov(a, b) /= static_cast<double>(n - 1);
            cov(b, a) = cov(a, b);
        }
    }
    return {samples.front().grid, mean, cov, n};
}

EmpiricalCovariance empirical_covariance(const std::vector<FieldSample>& samples) {
    check_batch(samples);
    const std::size_t n = samples.size();
    const auto dim = static_cast<Eigen::Index>(samples.front().grid->size());
    const std::size_t n_chunks = (n + kAccumulationChunk - 1) / kAccumulationChunk;
    auto chunk_range = [&](std::size_t c) {
        return std::pair{c * kAccumulationChunk, std::min(n, (c + 1) * kAccumulationChunk)};
    };

    // Pass 1: chunk sums of the data shifted by the first replicate, merged in
    // chunk order.
    const Eigen::VectorXd origin = flatten(samples.front().values);
    std::vector<Eigen::VectorXd> sums(n_chunks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
        const auto [lo, hi] = chunk_range(static_cast<std::size_t>(c));
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
        for (std::size_t r = lo; r < hi; ++r) acc += flatten(samples[r].values) - origin;
        sums[static_cast<std::size_t>(c)] = std::move(acc);
    }
    Eigen::VectorXd shift_mean = Eigen::VectorXd::Zero(dim);
    for (const auto& s : sums) shift_mean += s;
    shift_mean /= static_cast<double>(n);
    const Eigen::VectorXd mean = origin + shift_mean;

    // Pass 2: centered cross products. Chunks are processed in fixed-size
    // batches to bound memory; batch partials are merged in chunk order.
    constexpr std::size_t kBatch = 16;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    std::vector<Eigen::MatrixXd> partial(kBatch);
    for (std::size_t first = 0; first < n_chunks; first += kBatch) {
        const std::size_t count = std::min(kBatch, n_chunks - first);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(count); ++k) {
            const auto [lo, hi] = chunk_range(first + static_cast<std::size_t>(k));
            Eigen::MatrixXd centered(static_cast<Eigen::Index>(hi - lo), dim);
            for (std::size_t r = lo; r < hi; ++r) {
                centered.row(static_cast<Eigen::Index>(r - lo)) =
                    ((flatten(samples[r].values) - origin) - shift_mean).transpose();
            }
            partial[static_cast<std::size_t>(k)] = centered.transpose() * centered;
        }
        for (std::size_t k = 0; k < count; ++k) cov += partial[k];
    }
    cov /= static_cast<double>(n - 1);
    // Exact symmetry: mirror the upper triangle.
    for (Eigen::Index a = 0; a < dim; ++a) {
        for (Eigen::Index b = a + 1; b < dim; ++b) cov(b, a) = cov(a, b);
    }
    return {samples.front().grid, mean, cov, n};
}

// Gates ------------------------------------------------------------------------

VerificationReport covariance_gate(const EmpiricalCovariance& emp, const Eigen::MatrixXd& target,
                                   double confidence_sigmas, const std::string& name) {
    if (emp.cov.rows() != target.rows() || target.rows() != target.cols()) {
        throw DomainError("covariance gate: target and empirical matrices differ in size");
    }
    VerificationReport report;
    report.check_name = name;
    report.tolerance = confidence_sigmas;

    const BandCount entries = count_entries(emp.cov, target, emp.n, confidence_sigmas, 1.0);
    const std::size_t mean_outside = count_mean_outside(emp.mean, target, emp.n, confidence_sigmas);
    const auto mean_tested = static_cast<std::size_t>(emp.mean.size());
    // Mean entries join the covariance entries in one 95% pool; an all-entries
    // rule on the mean alone would fail a correct sampler about 1 - 0.9973^n of the time.
    report.passed = fraction_ok(entries.outside + mean_outside, entries.tested + mean_tested);
    report.max_residual = entries.max_residual;
    report.residual_location = emp.grid ? entry_location(*emp.grid, entries.arg_a, entries.arg_b) : "";
    report.n_entries_tested = entries.tested;
    report.n_entries_outside_band = entries.outside;
    report.metadata["n_replicates"] = std::to_string(emp.n);
    report.metadata["fraction_within_band"] =
        format_double(static_cast<double>(entries.tested - entries.outside) / static_cast<double>(entries.tested));
    report.metadata["mean_entries_tested"] = std::to_string(mean_tested);
    report.metadata["mean_entries_outside_band"] = std::to_string(mean_outside);
    report.metadata["max_standardized_residual"] = format_double(entries.max_z);
    report.metadata["generator"] = kGeneratorId;
    return report;
}

VerificationReport covariance_gate(const EmpiricalCovariance& emp, const Kernel2D& target, double confidence_sigmas) {
    if (!emp.grid) throw DomainError("covariance gate: empirical covariance has no grid");
    return covariance_gate(emp, covariance_matrix(target, *emp.grid), confidence_sigmas, "covariance:" + target.name());
}

Point grid_shift(const GridSpec& a, const GridSpec& b) {
    if (a.ns() != b.ns() || a.nt() != b.nt() || a.size() == 0) {
        throw DomainError("stationarity gate: grids have different shapes");
    }
    const Point shift{b.s_points[0] - a.s_points[0], b.t_points[0] - a.t_points[0]};
    auto congruent = [](const std::vector<double>& x, const std::vector<double>& y, double d) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double tol = 1e-12 * std::max({1.0, std::abs(x[i]), std::abs(y[i])});
            if (!(std::abs(y[i] - x[i] - d) <= tol)) return false;
        }
        return true;
    };
    if (!congruent(a.s_points, b.s_points, shift.s) || !congruent(a.t_points, b.t_points, shift.t)) {
        throw DomainError("stationarity gate: grids are not translates of each other");
    }
    return shift;
}

VerificationReport ou_stationarity_gate(const EmpiricalCovariance& a, const EmpiricalCovariance& b,
                                        const Eigen::MatrixXd& target, double confidence_sigmas) {
    if (!a.grid || !b.grid) throw DomainError("stationarity gate: empirical covariance has no grid");
    const Point shift = grid_shift(*a.grid, *b.grid);

    const VerificationReport ra = covariance_gate(a, target, confidence_sigmas, "first batch");
    const VerificationReport rb = covariance_gate(b, target, confidence_sigmas, "shifted batch");
    const std::size_t n = std::min(a.n, b.n);
    const BandCount diff = count_entries(a.cov - b.cov + target, target, n, confidence_sigmas, std::sqrt(2.0));
    const bool diff_ok = fraction_ok(diff.outside, diff.tested);

    VerificationReport report;
    report.check_name = "ou-stationarity";
    report.tolerance = confidence_sigmas;
    report.passed = ra.passed && rb.passed && diff_ok;
    const bool b_worse = rb.max_residual > ra.max_residual;
    report.max_residual = b_worse ? rb.max_residual : ra.max_residual;
    report.residual_location = (b_worse ? "shifted batch " : "first batch ") +
                               (b_worse ? rb.residual_location : ra.residual_location);
    report.n_entries_tested = ra.n_entries_tested + rb.n_entries_tested + diff.tested;
    report.n_entries_outside_band = ra.n_entries_outside_band + rb.n_entries_outside_band + diff.outside;
    report.metadata["shift"] = "(" + format_double(shift.s) + ", " + format_double(shift.t) + ")";
    report.metadata["first_batch_pass"] = ra.passed ? "true" : "false";
    report.metadata["shifted_batch_pass"] = rb.passed ? "true" : "false";
    report.metadata["batch_difference_pass"] = diff_ok ? "true" : "false";
    report.metadata["n_replicates"] = std::to_string(a.n) + "," + std::to_string(b.n);
    report.metadata["generator"] = kGeneratorId;
    return report;
}

VerificationReport ou_stationarity_gate(const EmpiricalCovariance& a, const EmpiricalCovariance& b,
                                        const OUParams& params, double confidence_sigmas) {
    if (!a.grid) throw DomainError("stationarity gate: empirical covariance has no grid");
    const GridSpec& grid = *a.grid;
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd target(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            target(i, k) = eval_ou(params, grid.point(static_cast<std::size_t>(i)), grid.point(static_cast<std::size_t>(k)));
        }
    }
    return ou_stationarity_gate(a, b, target, confidence_sigmas);
}

}  // namespace oufield
