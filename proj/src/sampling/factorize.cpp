#include <cmath>
#include <string>

#include "oufield/errors.hpp"
#include "oufield/sampling.hpp"

namespace oufield {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Returns the index of the failing pivot, or -1 on success.
Eigen::Index cholesky_into(const Eigen::MatrixXd& a, double jitter, RowMajor& l) {
    const Eigen::Index n = a.rows();
    l.setZero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = a(j, j) + jitter - l.row(j).head(j).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d)) return j;
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
        }
    }
    return -1;
}

void check_square_symmetric(const Eigen::MatrixXd& cov) {
    if (cov.rows() != cov.cols()) throw DomainError("factorize: matrix is not square");
    const double bound = 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < cov.cols(); ++j) {
            if (!(std::abs(cov(i, j) - cov(j, i)) <= bound)) {
                throw DomainError("factorize: matrix is not symmetric at (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ")");
            }
        }
    }
}

}  // namespace

Factorization factorize(const Eigen::MatrixXd& cov) {
    check_square_symmetric(cov);
    const Eigen::Index n = cov.rows();
    Factorization out;
    if (n == 0) return out;

    const double base = cov.trace() / static_cast<double>(n);
    RowMajor l;
    Eigen::Index failed = cholesky_into(cov, 0.0, l);
    if (failed >= 0 && base > 0.0) {
        for (double rel = 1e-12; rel <= 1.0001e-8; rel *= 10.0) {
            out.jitter = rel * base;
            failed = cholesky_into(cov, out.jitter, l);
            if (failed < 0) break;
        }
    }
    if (failed >= 0) {
        throw NotPsdError("matrix is not PSD: leading minor " + std::to_string(failed) +
                              " failed at maximum jitter",
                          static_cast<std::size_t>(failed));
    }
    out.lower = l;
    return out;
}

Factorization factorize_masked(const Eigen::MatrixXd& cov) {
    check_square_symmetric(cov);
    const Eigen::Index n = cov.rows();
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (cov(i, i) != 0.0) {
            active.push_back(i);
        } else if (cov.row(i).cwiseAbs().maxCoeff() != 0.0) {
            throw NotPsdError("matrix is not PSD: zero diagonal with nonzero row " + std::to_string(i),
                              static_cast<std::size_t>(i));
        }
    }
    if (static_cast<Eigen::Index>(active.size()) == n) return factorize(cov);

    const auto m = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = cov(active[a], active[b]);
    }
    Factorization inner;
    try {
        inner = factorize(sub);
    } catch (const NotPsdError& e) {
        const auto idx = static_cast<std::size_t>(active[e.minor_index()]);
        throw NotPsdError("matrix is not PSD: leading minor " + std::to_string(idx) + " failed at maximum jitter",
                          idx);
    }
    Factorization out;
    out.jitter = inner.jitter;
    out.lower = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b <= a; ++b) out.lower(active[a], active[b]) = inner.lower(a, b);
    }
    return out;
}

}  // namespace oufield
