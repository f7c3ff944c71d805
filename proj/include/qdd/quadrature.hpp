#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

namespace qdd {

// Gauss-Kronrod 7-15 panel with error estimate, plus a globally adaptive
// driver that keeps splitting the worst panel until the summed error estimate
// meets the tolerance.
namespace gk {

inline constexpr double kNodes[8] = {
    0.9914553711208126392068547, 0.9491079123427585245261897,
    0.8648644233597690727897128, 0.7415311855993944398638648,
    0.5860872354676911302941448, 0.4058451513773971669066064,
    0.2077849550078984676006894, 0.0};

inline constexpr double kKronrodW[8] = {
    0.0229353220105292249637320, 0.0630920926299785532907007,
    0.1047900103222501838398763, 0.1406532597155259187451896,
    0.1690047266392679028265834, 0.1903505780647854099132564,
    0.2044329400752988924141620, 0.2094821410847278280129992};

inline constexpr double kGaussW[4] = {
    0.1294849661688696932706114, 0.2797053914892766679014678,
    0.3818300505051189449503698, 0.4179591836734693877551020};

template <class F>
void panel(const F& f, double a, double b, double& integral, double& error) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double k15 = kKronrodW[7] * f(c);
    double g7 = kGaussW[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        const double x = h * kNodes[i];
        const double pair = f(c - x) + f(c + x);
        k15 += kKronrodW[i] * pair;
        if (i % 2 == 1) g7 += kGaussW[i / 2] * pair;
    }
    integral = k15 * h;
    error = std::fabs((k15 - g7) * h);
}

}  // namespace gk

template <class F>
double adaptive_quadrature(const F& f, double a, double b, double abs_tol,
                           double rel_tol = 1e-13, int max_panels = 4000) {
    struct Panel {
        double a, b, integral, error;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    std::priority_queue<Panel> q;
    double total = 0.0, err = 0.0;
    auto push = [&](double lo, double hi) {
        Panel p{lo, hi, 0.0, 0.0};
        gk::panel(f, lo, hi, p.integral, p.error);
        total += p.integral;
        err += p.error;
        q.push(p);
    };
    // Seed with a few panels so sharply peaked integrands are found early.
    const int seeds = 8;
    for (int i = 0; i < seeds; ++i)
        push(a + (b - a) * i / seeds, a + (b - a) * (i + 1) / seeds);

    int panels = seeds;
    while (err > std::max(abs_tol, rel_tol * std::fabs(total)) &&
           panels < max_panels) {
        const Panel worst = q.top();
        q.pop();
        total -= worst.integral;
        err -= worst.error;
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {  // width at rounding limit
            total += worst.integral;             // accept as-is
            continue;
        }
        push(worst.a, mid);
        push(mid, worst.b);
        ++panels;
    }
    return total;
}

}  // namespace qdd
