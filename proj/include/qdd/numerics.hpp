#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace qdd {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logaddexp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

inline double logsumexp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Pairwise (cascade) summation. Result depends only on the contents of the
// range, never on thread scheduling, and keeps rounding error O(log n).
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return v;
}

// Clamp components to [0,1], then rescale onto the capped simplex
// {x_i >= 0, sum x_i <= 1} if the sum exceeds one. Shared by the SDE filter
// and the DP dynamics so both use identical projections.
inline void project_to_capped_simplex(std::span<double> x) {
    double s = 0.0;
    for (double& v : x) {
        v = std::clamp(v, 0.0, 1.0);
        s += v;
    }
    if (s > 1.0) {
        for (double& v : x) v /= s;
    }
}

}  // namespace qdd
