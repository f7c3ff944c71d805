#include "qdd/shiryaev.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qdd/quadrature.hpp"

namespace qdd {

namespace {

constexpr double kLowerCut = 1e-12;  // quadrature start; the weight below is nil

void check_params(const ClassicalParams& p) {
    if (p.b == 0.0 || !(p.sigma > 0.0) || !(p.lambda > 0.0) || !(p.c > 0.0))
        throw std::invalid_argument(
            "ClassicalParams: need b != 0, sigma > 0, lambda > 0, c > 0");
}

// Integrating-factor exponent: psi' = 1 / (s^2 (1-s)).
double psi(double s) { return std::log(s) - std::log1p(-s) - 1.0 / s; }

}  // namespace

double shiryaev_derivative(const ClassicalParams& params, double pi,
                           double deriv_tol) {
    check_params(params);
    if (pi <= kLowerCut) return 0.0;
    if (pi >= 1.0)
        return -std::numeric_limits<double>::infinity();
    const double rho = params.rho();
    const double big_lambda = params.lambda / rho;
    const double psi_pi = psi(pi);
    auto integrand = [&](double s) {
        const double expo =
            big_lambda * (psi(s) - psi_pi) - std::log(s) - 2.0 * std::log1p(-s);
        return std::exp(expo);
    };
    const double abs_tol =
        std::max(deriv_tol * rho / params.c, 1e-300);
    const double integral =
        adaptive_quadrature(integrand, kLowerCut, pi, abs_tol, 1e-13);
    return -(params.c / rho) * integral;
}

double shiryaev_threshold(const ClassicalParams& params,
                          const SolveOptions& opts) {
    check_params(params);
    double lo = params.lambda / (params.lambda + params.c);
    double hi = 1.0 - 1e-8;
    const double g_lo = shiryaev_derivative(params, lo, opts.deriv_tol);
    if (!(g_lo > -1.0)) {
        std::ostringstream os;
        os << "NoBracket: U'(" << lo << ") = " << g_lo << " <= -1";
        throw NoBracketError(os.str());
    }
    const double g_hi = shiryaev_derivative(params, hi, opts.deriv_tol);
    if (!(g_hi < -1.0)) {
        std::ostringstream os;
        os << "NoBracket: U'(1-1e-8) = " << g_hi << " >= -1";
        throw NoBracketError(os.str());
    }
    while (hi - lo > opts.root_tol) {
        const double mid = 0.5 * (lo + hi);
        if (shiryaev_derivative(params, mid, opts.deriv_tol) > -1.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double ShiryaevSolution::value_at(double pi) const {
    if (pi >= threshold) return 1.0 - pi;
    const auto n = value.size();
    const double h = 1.0 / static_cast<double>(n - 1);
    const auto i = std::min(static_cast<std::size_t>(pi / h), n - 2);
    const double f = pi / h - static_cast<double>(i);
    return (1.0 - f) * value[i] + f * value[i + 1];
}

double ShiryaevSolution::derivative_at(double pi) const {
    if (pi >= threshold) return -1.0;
    const auto n = derivative.size();
    const double h = 1.0 / static_cast<double>(n - 1);
    const auto i = std::min(static_cast<std::size_t>(pi / h), n - 2);
    const double f = pi / h - static_cast<double>(i);
    return (1.0 - f) * derivative[i] + f * derivative[i + 1];
}

ShiryaevSolution solve_shiryaev(const ClassicalParams& params,
                                const SolveOptions& opts) {
    ShiryaevSolution sol;
    sol.params = params;
    sol.root_tol = opts.root_tol;
    sol.deriv_tol = opts.deriv_tol;
    sol.threshold = shiryaev_threshold(params, opts);
    const int n = opts.grid_points;
    const double h = 1.0 / (n - 1);
    sol.value.resize(static_cast<std::size_t>(n));
    sol.derivative.resize(static_cast<std::size_t>(n));

    auto g = [&](double pi) {
        return shiryaev_derivative(params, pi, opts.deriv_tol);
    };

    int ka = -1;  // last grid index strictly below the threshold
    for (int k = 0; k < n; ++k) {
        const double pi = k * h;
        if (pi < sol.threshold) {
            sol.derivative[static_cast<std::size_t>(k)] = g(pi);
            ka = k;
        } else {
            sol.derivative[static_cast<std::size_t>(k)] = -1.0;
            sol.value[static_cast<std::size_t>(k)] = 1.0 - pi;
        }
    }

    // Integrate U' downward from the smooth-fit point with a 7-point Gauss
    // rule per cell.
    auto cell_integral = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        double s = gk::kGaussW[3] * g(c);
        for (int i = 0; i < 3; ++i) {
            const double x = half * gk::kNodes[2 * i + 1];
            s += gk::kGaussW[i] * (g(c - x) + g(c + x));
        }
        return s * half;
    };
    if (ka >= 0) {
        double u = 1.0 - sol.threshold -
                   cell_integral(ka * h, sol.threshold);
        sol.value[static_cast<std::size_t>(ka)] = u;
        for (int k = ka - 1; k >= 0; --k) {
            u -= cell_integral(k * h, (k + 1) * h);
            sol.value[static_cast<std::size_t>(k)] = u;
        }
    }
    return sol;
}

double variational_residual(double pi, const ClassicalParams& params,
                            const ShiryaevSolution& solution) {
    check_params(params);
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("variational_residual: pi must be in (0,1)");
    if (pi > solution.threshold)
        return params.c * pi - params.lambda * (1.0 - pi);

    const double rho = params.rho();
    const double big_lambda = std::max(params.lambda / rho, 1.0);
    // Step small enough that the five-point stencil resolves the boundary
    // layer of width ~ pi^2(1-pi)/Lambda, large enough to stay above the
    // quadrature noise floor.
    const double layer = pi * pi * (1.0 - pi) / big_lambda;
    const double delta =
        std::clamp(std::min(layer / 50.0, pi / 3.0), 1e-6, 1e-4);
    auto g = [&](double x) {
        return shiryaev_derivative(params, x, solution.deriv_tol);
    };
    const double d1 = (g(pi - 2 * delta) - 8 * g(pi - delta) +
                       8 * g(pi + delta) - g(pi + 2 * delta)) /
                      (12 * delta);
    return params.lambda * (1.0 - pi) * g(pi) +
           rho * pi * pi * (1.0 - pi) * (1.0 - pi) * d1 + params.c * pi;
}

}  // namespace qdd
