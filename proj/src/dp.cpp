#include "qdd/dp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qdd/errors.hpp"
#include "qdd/numerics.hpp"
#include "qdd/parallel.hpp"
#include "qdd/rng.hpp"

namespace qdd {

namespace {

// 7-point Gauss-Hermite rule mapped to a standard normal: E[f(Z)] ~ sum w f(z).
constexpr int kQuad = 7;
constexpr double kGhNode[kQuad] = {
    -2.65196135683523349245, -1.67355162876747144503, -0.81628788285896466304,
    0.0,
    0.81628788285896466304,  1.67355162876747144503,  2.65196135683523349245};
constexpr double kGhWeight[kQuad] = {
    0.00097178124509951915415 / 1.7724538509055160273,
    0.054515582819127030592 / 1.7724538509055160273,
    0.42560725261012780052 / 1.7724538509055160273,
    0.81026461755680732676 / 1.7724538509055160273,
    0.42560725261012780052 / 1.7724538509055160273,
    0.054515582819127030592 / 1.7724538509055160273,
    0.00097178124509951915415 / 1.7724538509055160273};

struct Stencil {
    std::int32_t idx[3];
    double w[3];
};

int grid_size_from(double h) {
    const int m = static_cast<int>(std::llround(1.0 / h));
    if (std::fabs(m * h - 1.0) > 1e-9 || m < 2)
        throw std::invalid_argument("DpOptions: 1/h must be an integer >= 2");
    return m;
}

Stencil stencil1(double x, int m, double h) {
    x = std::clamp(x, 0.0, 1.0);
    const double g = x / h;
    const int i = std::min(static_cast<int>(g), m - 1);
    const double f = g - i;
    return Stencil{{i, i + 1, 0}, {1.0 - f, f, 0.0}};
}

Stencil stencil2(double x, double y, int m, double h) {
    const double gx = x / h, gy = y / h;
    int i = std::min(static_cast<int>(gx), m - 1);
    int j = std::min(static_cast<int>(gy), m - 1);
    double fx = gx - i, fy = gy - j;
    const auto id = [m](int a, int b) {
        return static_cast<std::int32_t>(a * (m + 1) + b);
    };
    const double fs = fx + fy;
    if (fs <= 1.0)
        return Stencil{{id(i, j), id(i + 1, j), id(i, j + 1)},
                       {1.0 - fs, fx, fy}};
    if (i + j + 2 <= m)
        return Stencil{{id(i + 1, j + 1), id(i + 1, j), id(i, j + 1)},
                       {fs - 1.0, 1.0 - fy, 1.0 - fx}};
    // Rounding pushed the point past the diagonal face: renormalize onto it.
    return Stencil{{id(i + 1, j), id(i, j + 1), id(i, j)},
                   {fx / fs, fy / fs, 0.0}};
}

}  // namespace

double DPSolution::value_at(double x) const {
    const auto s = stencil1(x, m, h);
    return s.w[0] * value[static_cast<std::size_t>(s.idx[0])] +
           s.w[1] * value[static_cast<std::size_t>(s.idx[1])];
}

double DPSolution::value_at(double x, double y) const {
    const auto s = stencil2(x, y, m, h);
    double v = 0.0;
    for (int t = 0; t < 3; ++t)
        v += s.w[t] * value[static_cast<std::size_t>(s.idx[t])];
    return v;
}

DPSolution solve_dp(const ModelSpec& model, const DpOptions& opts) {
    const auto n = model.n();
    if (n != 1 && n != 2)
        throw std::invalid_argument("solve_dp supports n in {1,2} only");
    if (!model.constant_parameters())
        throw std::invalid_argument("solve_dp needs constant sigma, cost, rate");

    const int m = grid_size_from(opts.h);
    const double h = opts.h;
    const double dt = opts.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double sigma = model.sigma.constant_value();
    const double cost = model.cost.constant_value();
    const double lambda = model.disorder.exponential_rate();
    const auto& b = model.prior1.b;
    const auto& p = model.prior1.p;

    DPSolution sol;
    sol.n = static_cast<int>(n);
    sol.m = m;
    sol.h = h;
    sol.dt = dt;

    // Enumerate simplex nodes; precompute stop payoff, running cost and the
    // interpolation stencils of the seven quadrature images of each node.
    std::vector<std::int32_t> node_at;
    std::vector<double> stop_pay, run_cost;
    std::vector<Stencil> stencils;  // node-major, kQuad per node

    auto add_node = [&](double x, double y, std::int32_t flat) {
        const double s = x + y;
        node_at.push_back(flat);
        stop_pay.push_back(1.0 - s);
        run_cost.push_back(cost * s * dt);
        const double xhat = n == 1 ? b[0] * x : b[0] * x + b[1] * y;
        double drift[2] = {0.0, 0.0}, diff[2] = {0.0, 0.0};
        drift[0] = p[0] * lambda * (1.0 - s) * dt;
        diff[0] = x / sigma * (b[0] - xhat) * sqrt_dt;
        if (n == 2) {
            drift[1] = p[1] * lambda * (1.0 - s) * dt;
            diff[1] = y / sigma * (b[1] - xhat) * sqrt_dt;
        }
        for (int q = 0; q < kQuad; ++q) {
            double img[2] = {x + drift[0] + diff[0] * kGhNode[q],
                             y + drift[1] + diff[1] * kGhNode[q]};
            project_to_capped_simplex(std::span<double>(img, n));
            stencils.push_back(n == 1 ? stencil1(img[0], m, h)
                                      : stencil2(img[0], img[1], m, h));
        }
    };

    if (n == 1) {
        for (int i = 0; i <= m; ++i)
            add_node(i * h, 0.0, static_cast<std::int32_t>(i));
        sol.value.assign(static_cast<std::size_t>(m) + 1, 0.0);
    } else {
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j + i <= m; ++j)
                add_node(i * h, j * h,
                         static_cast<std::int32_t>(i * (m + 1) + j));
        sol.value.assign(static_cast<std::size_t>(m + 1) * (m + 1), 0.0);
    }
    const std::int64_t n_nodes = static_cast<std::int64_t>(node_at.size());

    std::vector<double> v_old(sol.value.size(), 0.0);
    std::vector<double> v_new(sol.value.size(), 0.0);
    for (std::int64_t k = 0; k < n_nodes; ++k)
        v_old[static_cast<std::size_t>(node_at[static_cast<std::size_t>(k)])] =
            stop_pay[static_cast<std::size_t>(k)];

    const int threads = resolve_threads(opts.threads);
    double sup_change = 0.0;
    double worst_up = 0.0;
    std::int64_t iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        sup_change = 0.0;
#pragma omp parallel for schedule(static) num_threads(threads) \
    reduction(max : sup_change) reduction(max : worst_up)
        for (std::int64_t k = 0; k < n_nodes; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const Stencil* st = &stencils[kk * kQuad];
            double cont = run_cost[kk];
            for (int q = 0; q < kQuad; ++q) {
                const Stencil& s = st[q];
                cont += kGhWeight[q] *
                        (s.w[0] * v_old[static_cast<std::size_t>(s.idx[0])] +
                         s.w[1] * v_old[static_cast<std::size_t>(s.idx[1])] +
                         s.w[2] * v_old[static_cast<std::size_t>(s.idx[2])]);
            }
            const double v = std::min(stop_pay[kk], cont);
            const auto flat = static_cast<std::size_t>(node_at[kk]);
            const double delta = v - v_old[flat];
            sup_change = std::max(sup_change, std::fabs(delta));
            worst_up = std::max(worst_up, delta);
            v_new[flat] = v;
        }
        std::swap(v_old, v_new);
        if (sup_change < opts.tol) {
            ++iter;
            break;
        }
    }
    if (sup_change >= opts.tol) {
        std::ostringstream os;
        os << "NoConvergence: sup change " << sup_change << " after " << iter
           << " sweeps";
        throw NoConvergenceError(os.str());
    }

    // Final classification sweep: which branch the converged values take.
    sol.stop.assign(sol.value.size(), 0);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t k = 0; k < n_nodes; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const Stencil* st = &stencils[kk * kQuad];
        double cont = run_cost[kk];
        for (int q = 0; q < kQuad; ++q) {
            const Stencil& s = st[q];
            cont += kGhWeight[q] *
                    (s.w[0] * v_old[static_cast<std::size_t>(s.idx[0])] +
                     s.w[1] * v_old[static_cast<std::size_t>(s.idx[1])] +
                     s.w[2] * v_old[static_cast<std::size_t>(s.idx[2])]);
        }
        const auto flat = static_cast<std::size_t>(node_at[kk]);
        sol.stop[flat] = stop_pay[kk] <= cont ? 1 : 0;
        sol.value[flat] = std::min(stop_pay[kk], cont);
    }

    sol.iterations = iter;
    sol.sup_change = sup_change;
    sol.monotone_violation = worst_up;
    return sol;
}

std::vector<BoundaryNode> extract_boundary(const DPSolution& sol) {
    if (sol.n != 2)
        throw std::invalid_argument("extract_boundary needs an n = 2 solution");
    const int m = sol.m;
    auto is_stop = [&](int i, int j) { return sol.stop[sol.index(i, j)] != 0; };
    std::vector<BoundaryNode> nodes;
    bool any_stop = false;
    for (int i = 0; i <= m; ++i) {
        for (int j = 0; j + i <= m; ++j) {
            if (is_stop(i, j)) {
                any_stop = true;
                continue;
            }
            bool adjacent = false;
            if (i > 0 && is_stop(i - 1, j)) adjacent = true;
            if (j > 0 && is_stop(i, j - 1)) adjacent = true;
            if (i + j + 1 <= m &&
                (is_stop(i + 1, j) || is_stop(i, j + 1)))
                adjacent = true;
            if (adjacent)
                nodes.push_back(BoundaryNode{i, j, i * sol.h, j * sol.h,
                                             (i + j) * sol.h});
        }
    }
    if (!any_stop || nodes.empty())
        throw EmptyBoundaryError(
            "EmptyBoundary: stop region is empty or covers the whole simplex");
    return nodes;
}

double concavity_check(const DPSolution& sol, int n_segments,
                       std::uint64_t seed) {
    constexpr int kPoints = 11;
    double worst = 0.0;
    for (int s = 0; s < n_segments; ++s) {
        StreamSampler u(seed, static_cast<std::uint64_t>(s), 900);
        double ax, ay = 0.0, bx, by = 0.0;
        if (sol.n == 1) {
            ax = u.next_uniform();
            bx = u.next_uniform();
        } else {
            ax = u.next_uniform();
            ay = u.next_uniform();
            if (ax + ay > 1.0) {
                ax = 1.0 - ax;
                ay = 1.0 - ay;
            }
            bx = u.next_uniform();
            by = u.next_uniform();
            if (bx + by > 1.0) {
                bx = 1.0 - bx;
                by = 1.0 - by;
            }
        }
        double v[kPoints];
        for (int t = 0; t < kPoints; ++t) {
            const double f = static_cast<double>(t) / (kPoints - 1);
            const double x = ax + f * (bx - ax);
            const double y = ay + f * (by - ay);
            v[t] = sol.n == 1 ? sol.value_at(x) : sol.value_at(x, y);
        }
        for (int t = 1; t + 1 < kPoints; ++t)
            worst = std::max(worst, v[t - 1] - 2.0 * v[t] + v[t + 1]);
    }
    return worst;
}

}  // namespace qdd
