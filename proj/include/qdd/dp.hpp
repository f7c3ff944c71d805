#pragma once

#include <cstdint>
#include <vector>

#include "qdd/model.hpp"

namespace qdd {

struct DpOptions {
    double h = 1.0 / 400;  // simplex grid spacing; 1/h must be integral
    double dt = 1e-3;
    double tol = 1e-7;  // sup-norm change at which iteration stops
    std::int64_t max_iterations = 100000;
    int threads = 0;
};

// Value function of the constant-parameter stopping problem on the capped
// simplex, computed by value iteration: one Euler step of the posterior
// dynamics per stage, the scalar noise integrated by 7-point Gauss-Hermite,
// continuation values read through piecewise-linear interpolation.
struct DPSolution {
    int n = 1;
    int m = 0;  // nodes per axis; node coordinates are multiples of h = 1/m
    double h = 0.0;
    double dt = 0.0;
    std::vector<double> value;        // n=1: m+1 entries; n=2: (m+1)^2 row-major
    std::vector<std::uint8_t> stop;   // stop-branch mask, same layout
    std::int64_t iterations = 0;
    double sup_change = 0.0;
    double monotone_violation = 0.0;  // max positive per-sweep increase (0 expected)

    std::size_t index(int i, int j = 0) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(m + 1) +
               static_cast<std::size_t>(j);
    }
    // Piecewise-linear interpolation inside the simplex.
    double value_at(double x) const;            // n = 1
    double value_at(double x, double y) const;  // n = 2
};

// Requires constant sigma, cost and disorder rate, and n in {1,2}. Throws
// NoConvergenceError if the sup-change is still above tol at the iteration cap.
DPSolution solve_dp(const ModelSpec& model, const DpOptions& opts);

struct BoundaryNode {
    int i = 0, j = 0;
    double pi1 = 0.0, pi2 = 0.0;
    double l1 = 0.0;
};

// Continuation nodes adjacent to a stop node (n = 2). Throws
// EmptyBoundaryError when the stop region leaves no continuation nodes.
std::vector<BoundaryNode> extract_boundary(const DPSolution& solution);

// Max positive second difference of the interpolated value over random
// segments through the simplex (11 sample points per segment).
double concavity_check(const DPSolution& solution, int n_segments,
                       std::uint64_t seed);

}  // namespace qdd
