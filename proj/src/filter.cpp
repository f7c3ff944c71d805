#include "qdd/filter.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "qdd/errors.hpp"
#include "qdd/numerics.hpp"
#include "qdd/parallel.hpp"

namespace qdd {

namespace {

void check_finite(const SamplePath& path) {
    for (double v : path.dY)
        if (!std::isfinite(v))
            throw InputError("observation increments contain NaN/Inf");
}

PosteriorPath make_empty(const TimeGrid& grid, std::size_t n) {
    PosteriorPath out;
    out.grid = grid;
    out.n = n;
    const auto nodes = static_cast<std::size_t>(grid.steps) + 1;
    out.pi.resize(nodes * n);
    out.pi_tilde.resize(nodes);
    out.x_hat.resize(nodes);
    return out;
}

}  // namespace

ExactFilter::ExactFilter(const ModelSpec& model, const GridCache& cache)
    : cache_(&cache),
      b_(model.prior1.b),
      p0_(model.prior0.p),
      p1_(model.prior1.p),
      pi0_(model.disorder.pi_tilde) {
    bb_half_.resize(b_.size());
    for (std::size_t i = 0; i < b_.size(); ++i)
        bb_half_[i] = 0.5 * b_[i] * b_[i];
    rr_.resize(b_.size());
    aa_.resize(b_.size());
    reset();
}

void ExactFilter::reset() {
    for (std::size_t i = 0; i < b_.size(); ++i) {
        rr_[i] = pi0_ * p0_[i];
        aa_[i] = 0.0;
    }
    ss_ = 1.0 - pi0_;
}

MismatchFilter::MismatchFilter(double drift, double rate, double sigma,
                               double pi_tilde, double dt)
    : a1_(drift / (sigma * sigma)),
      b1_(0.5 * drift * drift / (sigma * sigma) * dt),
      decay_(std::exp(-rate * dt)),
      half_dt_rate_(0.5 * dt * rate),
      pi0_(pi_tilde) {
    reset();
}

void MismatchFilter::reset() {
    rr_ = pi0_;
    aa_ = 0.0;
    ss_ = 1.0 - pi0_;
}

PosteriorPath filter_exact(const ModelSpec& model, const SamplePath& path) {
    check_finite(path);
    GridCache cache(model, path.grid);
    ExactFilter filter(model, cache);
    auto out = make_empty(path.grid, model.n());
    const std::size_t n = model.n();
    auto record = [&](std::size_t node) {
        for (std::size_t i = 0; i < n; ++i)
            out.pi[node * n + i] = filter.component(i);
        out.pi_tilde[node] = filter.pi_tilde();
        out.x_hat[node] = filter.x_hat();
    };
    record(0);
    for (std::int64_t k = 0; k < path.grid.steps; ++k) {
        filter.advance(k, path.dY[static_cast<std::size_t>(k)]);
        record(static_cast<std::size_t>(k) + 1);
    }
    return out;
}

PosteriorPath filter_sde(const ModelSpec& model, const SamplePath& path) {
    check_finite(path);
    const std::size_t n = model.n();
    auto out = make_empty(path.grid, n);
    const double dt = path.grid.dt;
    std::vector<double> state(n);
    for (std::size_t i = 0; i < n; ++i)
        state[i] = model.disorder.pi_tilde * model.prior0.p[i];

    auto record = [&](std::size_t node) {
        double sum = 0.0, xh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out.pi[node * n + i] = state[i];
            sum += state[i];
            xh += model.prior1.b[i] * state[i];
        }
        out.pi_tilde[node] = sum;
        out.x_hat[node] = xh;
    };
    record(0);
    for (std::int64_t k = 0; k < path.grid.steps; ++k) {
        const double t = path.grid.time(k);
        const double sig = model.sigma.value(t);
        const double lam = model.disorder.hazard(t);
        double sum = 0.0, xh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += state[i];
            xh += model.prior1.b[i] * state[i];
        }
        const double dw_hat =
            (path.dY[static_cast<std::size_t>(k)] - xh * dt) / sig;
        for (std::size_t i = 0; i < n; ++i)
            state[i] += model.prior1.p[i] * lam * (1.0 - sum) * dt +
                        state[i] / sig * (model.prior1.b[i] - xh) * dw_hat;
        project_to_capped_simplex(state);
        record(static_cast<std::size_t>(k) + 1);
    }
    return out;
}

std::vector<double> shiryaev_filter(double drift, double rate, double sigma,
                                    double pi_tilde, const SamplePath& path) {
    check_finite(path);
    MismatchFilter filter(drift, rate, sigma, pi_tilde, path.grid.dt);
    std::vector<double> g(static_cast<std::size_t>(path.grid.steps) + 1);
    g[0] = filter.value();
    for (std::int64_t k = 0; k < path.grid.steps; ++k) {
        filter.advance(path.dY[static_cast<std::size_t>(k)]);
        g[static_cast<std::size_t>(k) + 1] = filter.value();
    }
    return g;
}

std::vector<TowerRow> posterior_mean_check(const ModelSpec& model,
                                           std::int64_t n_paths,
                                           const TimeGrid& grid,
                                           std::uint64_t master_seed,
                                           const std::vector<double>& times,
                                           int threads) {
    std::vector<std::int64_t> nodes;
    for (double t : times) {
        const auto k = static_cast<std::int64_t>(std::llround(t / grid.dt));
        if (std::fabs(grid.time(k) - t) > 1e-9 || k < 0 || k > grid.steps)
            throw std::invalid_argument(
                "posterior_mean_check: checkpoint not on the grid");
        nodes.push_back(k);
    }
    const std::int64_t max_node =
        *std::max_element(nodes.begin(), nodes.end());

    GridCache cache(model, grid);
    const std::size_t nt = nodes.size();
    constexpr std::int64_t kBlock = 256;
    const std::int64_t blocks = (n_paths + kBlock - 1) / kBlock;
    std::vector<double> block_sum(static_cast<std::size_t>(blocks) * nt, 0.0);
    std::vector<double> block_sumsq(static_cast<std::size_t>(blocks) * nt, 0.0);

    for_each_block(n_paths, kBlock, threads,
                   [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        ExactFilter filter(model, cache);
        std::vector<double> vals(nt);
        for (std::int64_t p = lo; p < hi; ++p) {
            ScenarioGen gen(model, cache, master_seed,
                            static_cast<std::uint64_t>(p));
            filter.reset();
            std::size_t next = 0;
            for (std::size_t j = 0; j < nt; ++j)
                if (nodes[j] == 0) vals[j] = filter.pi_tilde();
            for (std::int64_t k = 0; k < max_node; ++k) {
                double dw, dy;
                gen.step(k, dw, dy);
                filter.advance(k, dy);
                for (std::size_t j = 0; j < nt; ++j)
                    if (nodes[j] == k + 1) vals[j] = filter.pi_tilde();
            }
            (void)next;
            for (std::size_t j = 0; j < nt; ++j) {
                block_sum[static_cast<std::size_t>(b) * nt + j] += vals[j];
                block_sumsq[static_cast<std::size_t>(b) * nt + j] +=
                    vals[j] * vals[j];
            }
        }
    });

    std::vector<TowerRow> rows(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        double sum = 0.0, sumsq = 0.0;
        for (std::int64_t b = 0; b < blocks; ++b) {
            sum += block_sum[static_cast<std::size_t>(b) * nt + j];
            sumsq += block_sumsq[static_cast<std::size_t>(b) * nt + j];
        }
        const double mean = sum / static_cast<double>(n_paths);
        const double var =
            std::max(0.0, (sumsq - static_cast<double>(n_paths) * mean * mean) /
                              static_cast<double>(n_paths - 1));
        rows[j].t = times[j];
        rows[j].mc_mean = mean;
        rows[j].se = std::sqrt(var / static_cast<double>(n_paths));
        rows[j].cdf = model.disorder.cdf(times[j]);
    }
    return rows;
}

namespace reference {

PosteriorPath filter_exact_logspace(const ModelSpec& model,
                                    const SamplePath& path) {
    check_finite(path);
    const std::size_t n = model.n();
    const auto steps = static_cast<std::size_t>(path.grid.steps);
    const double dt = path.grid.dt;
    const double pi0 = model.disorder.pi_tilde;

    // Per-atom log-likelihood prefix sums L_i(m), m = 0..steps.
    std::vector<std::vector<double>> big_l(n, std::vector<double>(steps + 1, 0.0));
    std::vector<double> log_f(steps + 1), h(steps + 1);
    for (std::size_t m = 0; m <= steps; ++m) {
        const double t = path.grid.time(static_cast<std::int64_t>(m));
        h[m] = model.disorder.cumulative_hazard(t);
        log_f[m] = std::log(model.disorder.hazard(t)) - h[m];
    }
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = path.grid.time(static_cast<std::int64_t>(k));
        const double sig = model.sigma.value(t);
        const double s2i = 1.0 / (sig * sig);
        for (std::size_t i = 0; i < n; ++i) {
            const double b = model.prior1.b[i];
            big_l[i][k + 1] =
                big_l[i][k] + b * s2i * path.dY[k] - 0.5 * b * b * s2i * dt;
        }
    }

    auto out = make_empty(path.grid, n);
    std::vector<double> log_num(n);
    for (std::size_t node = 0; node <= steps; ++node) {
        std::vector<double> log_terms;
        log_terms.reserve(2 * n + 1);
        for (std::size_t i = 0; i < n; ++i) {
            double term0 = kNegInf;
            if (pi0 > 0.0 && model.prior0.p[i] > 0.0)
                term0 = std::log(pi0 * model.prior0.p[i]) + big_l[i][node];
            double tail = kNegInf;
            if (pi0 < 1.0 && node >= 1 && model.prior1.p[i] > 0.0) {
                // Trapezoid over theta in [0, t_node].
                std::vector<double> seg(node + 1);
                for (std::size_t m = 0; m <= node; ++m) {
                    const double w = (m == 0 || m == node) ? 0.5 * dt : dt;
                    seg[m] = std::log(w) + log_f[m] + big_l[i][node] - big_l[i][m];
                }
                tail = std::log((1.0 - pi0) * model.prior1.p[i]) +
                       logsumexp(seg);
            }
            log_num[i] = logaddexp(term0, tail);
            log_terms.push_back(log_num[i]);
        }
        if (pi0 < 1.0) log_terms.push_back(std::log(1.0 - pi0) - h[node]);
        const double log_den = logsumexp(log_terms);
        double sum = 0.0, xh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = std::exp(log_num[i] - log_den);
            out.pi[node * n + i] = c;
            sum += c;
            xh += model.prior1.b[i] * c;
        }
        out.pi_tilde[node] = sum;
        out.x_hat[node] = xh;
    }
    return out;
}

}  // namespace reference

}  // namespace qdd
