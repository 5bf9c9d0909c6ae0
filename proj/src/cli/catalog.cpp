#include <cmath>
#include <sstream>

#include "oufield/cli.hpp"
#include "oufield/errors.hpp"
#include "oufield/sampling.hpp"

namespace oufield::cli {

namespace {

void positive(double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError(std::string("--") + name + " must be positive and finite (got " + format_double(x) + ")");
    }
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            throw DomainError(std::string(flag) + ": cannot parse '" + item + "' as a number");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<double> axis_points(const std::string& spec, double lower, double upper, double margin, bool closed,
                                const char* flag) {
    const bool is_count = !spec.empty() && spec.find_first_not_of("0123456789") == std::string::npos;
    if (!is_count) return parse_list(spec, flag);
    const auto n = static_cast<std::size_t>(std::stoul(spec));
    if (n == 0) throw DomainError(std::string(flag) + " must be at least 1");
    if (closed) return linspace(lower, upper, n);
    std::vector<double> pts = interior_points(upper - lower, n, margin);
    for (double& x : pts) x += lower;
    return pts;
}

}  // namespace

void RunConfig::validate() const {
    positive(alpha, "alpha");
    positive(beta, "beta");
    positive(sigma, "sigma");
    positive(S, "S");
    positive(T, "T");
    positive(rate, "rate");
    if (!(margin > 0.0 && margin < 0.5)) throw DomainError("--margin must lie in (0, 0.5)");
    if (!(tol >= 0.0)) throw DomainError("--tol must be non-negative");
    if (threads < 0) throw DomainError("--threads must be non-negative");
    if (cdf != "uniform" && cdf != "exponential") throw DomainError("--cdf must be 'uniform' or 'exponential'");
    if (path != "auto" && path != "dense" && path != "kronecker" && path != "wiener") {
        throw DomainError("--path must be one of auto, dense, kronecker, wiener");
    }
}

CdfSpec make_cdf(const RunConfig& config) {
    return config.cdf == "uniform" ? CdfSpec::uniform() : CdfSpec::exponential(config.rate);
}

FieldSpec make_field(const RunConfig& c) {
    c.validate();
    const std::string& f = c.family;
    if (f == "wiener") {
        return {wiener_kernel(), std::nullopt, std::nullopt, 0.0, 1.0, 0.0, 1.0, ""};
    }
    if (f == "ou") {
        const OUParams p{c.alpha, c.beta, c.sigma};
        return {ou_kernel(p), std::nullopt, p, -1.0, 1.0, -1.0, 1.0,
                "alpha=" + format_double(c.alpha) + " beta=" + format_double(c.beta) + " sigma=" + format_double(c.sigma)};
    }
    if (f == "bivariate" || f == "bivariate-bridge") {
        return {bivariate_bridge_kernel(), std::nullopt, std::nullopt, 0.0, 1.0, 0.0, 1.0, ""};
    }
    if (f == "tied-down") {
        return {tied_down_kernel(), transform_tied_down(), std::nullopt, 0.0, 1.0, 0.0, 1.0, ""};
    }
    if (f == "scaled") {
        return {scaled_bridge_kernel(c.S, c.alpha, c.T, c.beta),
                transform_scaled_field(c.S, c.alpha, c.T, c.beta),
                std::nullopt,
                0.0,
                c.S,
                0.0,
                c.T,
                "S=" + format_double(c.S) + " alpha=" + format_double(c.alpha) + " T=" + format_double(c.T) +
                    " beta=" + format_double(c.beta)};
    }
    if (f == "kiefer") {
        return {kiefer_kernel(), transform_kiefer(), std::nullopt, 0.0, 1.0, 0.0, 5.0, ""};
    }
    if (f == "fg") {
        const CdfSpec cdf = make_cdf(c);
        const double extent = std::isinf(cdf.horizon()) ? 5.0 / c.rate : cdf.horizon();
        return {fg_bridge_kernel(cdf, cdf), transform_fg(cdf, cdf), std::nullopt, 0.0, extent, 0.0, extent,
                "F=G=" + cdf.name()};
    }
    throw DomainError("--family must be one of wiener, ou, bivariate, tied-down, scaled, kiefer, fg (got '" + f + "')");
}

GridSpec make_grid(const FieldSpec& field, const std::string& s_spec, const std::string& t_spec, double margin,
                   bool include_boundary) {
    const bool closed = field.ou.has_value();
    GridSpec grid;
    grid.s_points = axis_points(s_spec, field.s_lower, field.s_upper, margin, closed, "--grid-s");
    grid.t_points = axis_points(t_spec, field.t_lower, field.t_upper, margin, closed, "--grid-t");
    grid.include_boundary = include_boundary;
    grid.validate();
    return grid;
}

}  // namespace oufield::cli
