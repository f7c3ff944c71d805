#pragma once

#include <vector>

#include "qdd/errors.hpp"

namespace qdd {

// Constant-parameter classical detection problem.
struct ClassicalParams {
    double b = 1.0;       // post-change drift, nonzero
    double sigma = 1.0;   // volatility > 0
    double lambda = 1.0;  // disorder rate > 0
    double c = 1.0;       // delay cost > 0

    double rho() const { return 0.5 * b * b / (sigma * sigma); }
};

struct SolveOptions {
    int grid_points = 2001;
    double root_tol = 1e-10;   // bisection width on the threshold
    double deriv_tol = 1e-12;  // absolute tolerance on U'
};

// Threshold and tabulated value function of the free-boundary problem. Below
// the threshold U solves the second-order ODE; above it U(pi) = 1 - pi.
struct ShiryaevSolution {
    ClassicalParams params;
    double threshold = 0.0;
    double root_tol = 0.0;
    double deriv_tol = 0.0;
    std::vector<double> value;       // on a uniform pi-grid of [0,1]
    std::vector<double> derivative;  // U' on the same grid

    double value_at(double pi) const;
    double derivative_at(double pi) const;
};

// U'(pi) for the bounded ODE solution, evaluated directly from its integral
// representation (valid on all of (0,1), also past the threshold).
double shiryaev_derivative(const ClassicalParams& params, double pi,
                           double deriv_tol = 1e-12);

// Unique root of U'(a) = -1 in (lambda/(lambda+c), 1); bisection after
// checking the bracket. Throws NoBracketError when the bracket fails.
double shiryaev_threshold(const ClassicalParams& params,
                          const SolveOptions& opts = {});

ShiryaevSolution solve_shiryaev(const ClassicalParams& params,
                                const SolveOptions& opts = {});

// Left-hand side of the variational inequality at pi != threshold, evaluated
// with the solver's derivative and a finite-difference second derivative (the
// tabulated route, independent of the ODE identity itself).
double variational_residual(double pi, const ClassicalParams& params,
                            const ShiryaevSolution& solution);

}  // namespace qdd
