#include "qdd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qdd/errors.hpp"

namespace qdd {

GridCache::GridCache(const ModelSpec& model, const TimeGrid& g) : grid(g) {
    const auto steps = static_cast<std::size_t>(g.steps);
    sigma.resize(steps);
    sig2inv.resize(steps);
    lambda.resize(steps + 1);
    exp_neg_dh.resize(steps);
    double h_prev = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = g.time(static_cast<std::int64_t>(k));
        sigma[k] = model.sigma.value(t);
        sig2inv[k] = 1.0 / (sigma[k] * sigma[k]);
        lambda[k] = model.disorder.hazard(t);
        const double h_next =
            model.disorder.cumulative_hazard(g.time(static_cast<std::int64_t>(k) + 1));
        exp_neg_dh[k] = std::exp(-(h_next - h_prev));
        h_prev = h_next;
    }
    lambda[steps] = model.disorder.hazard(g.horizon);
}

namespace {

double pick_atom(const DriftPrior& prior, double u) {
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < prior.size(); ++i) {
        c += prior.p[i];
        if (u < c) return prior.b[i];
    }
    return prior.b.back();
}

}  // namespace

ScenarioGen::ScenarioGen(const ModelSpec& model, const GridCache& cache,
                         std::uint64_t master_seed, std::uint64_t path_index)
    : cache_(&cache), noise_(master_seed, path_index, kStreamNoise) {
    StreamSampler theta_stream(master_seed, path_index, kStreamTheta);
    theta_ = model.disorder.sample_theta(theta_stream.next_uniform());
    StreamSampler mag_stream(master_seed, path_index, kStreamMagnitude);
    const double u = mag_stream.next_uniform();
    magnitude_ = pick_atom(theta_ == 0.0 ? model.prior0 : model.prior1, u);
}

ScenarioGen::ScenarioGen(const ModelSpec& model, const GridCache& cache,
                         std::uint64_t master_seed, std::uint64_t path_index,
                         double mismatch_drift, double mismatch_rate)
    : cache_(&cache), noise_(master_seed, path_index, kStreamNoise) {
    StreamSampler theta_stream(master_seed, path_index, kStreamTheta);
    const double u = theta_stream.next_uniform();
    const double pi = model.disorder.pi_tilde;
    if (u < pi) {
        theta_ = 0.0;
    } else {
        const double q = (u - pi) / (1.0 - pi);
        theta_ = -std::log1p(-q) / mismatch_rate;
    }
    // Consume the magnitude draw so the primary scenario is unchanged.
    StreamSampler mag_stream(master_seed, path_index, kStreamMagnitude);
    (void)mag_stream.next_uniform();
    magnitude_ = mismatch_drift;
}

namespace {

SamplePath materialize(const ModelSpec& model, const GridCache& cache,
                       ScenarioGen gen, std::uint64_t master_seed,
                       std::uint64_t path_index) {
    (void)model;
    SamplePath path;
    path.theta = gen.theta();
    path.magnitude = gen.magnitude();
    path.grid = cache.grid;
    path.master_seed = master_seed;
    path.path_index = path_index;
    const auto steps = static_cast<std::size_t>(cache.grid.steps);
    path.dW.resize(steps);
    path.dY.resize(steps);
    for (std::size_t k = 0; k < steps; ++k)
        gen.step(static_cast<std::int64_t>(k), path.dW[k], path.dY[k]);
    return path;
}

}  // namespace

SamplePath simulate_scenario(const ModelSpec& model, const TimeGrid& grid,
                             std::uint64_t master_seed,
                             std::uint64_t path_index) {
    GridCache cache(model, grid);
    return materialize(model, cache,
                       ScenarioGen(model, cache, master_seed, path_index),
                       master_seed, path_index);
}

std::pair<SamplePath, SamplePath> coupled_scenarios(
    const ModelSpec& model, double mismatch_drift, double mismatch_rate,
    const TimeGrid& grid, std::uint64_t master_seed,
    std::uint64_t path_index) {
    if (!model.constant_parameters())
        throw RateOrderError(
            "coupled_scenarios requires a constant-parameter model");
    if (mismatch_rate > model.disorder.exponential_rate())
        throw RateOrderError(
            "RateOrder: mismatch rate exceeds the model disorder rate");
    if (!(mismatch_rate > 0.0) || mismatch_drift == 0.0)
        throw RateOrderError("mismatch drift/rate must be nonzero/positive");
    GridCache cache(model, grid);
    auto primary =
        materialize(model, cache,
                    ScenarioGen(model, cache, master_seed, path_index),
                    master_seed, path_index);
    auto mismatched = materialize(
        model, cache,
        ScenarioGen(model, cache, master_seed, path_index, mismatch_drift,
                    mismatch_rate),
        master_seed, path_index);
    return {std::move(primary), std::move(mismatched)};
}

SamplePath coarsen(const SamplePath& path) {
    if (path.grid.steps % 2 != 0)
        throw std::invalid_argument("coarsen: step count must be even");
    SamplePath out;
    out.theta = path.theta;
    out.magnitude = path.magnitude;
    out.grid = TimeGrid::make(2.0 * path.grid.dt, path.grid.horizon);
    out.master_seed = path.master_seed;
    out.path_index = path.path_index;
    const auto steps = static_cast<std::size_t>(out.grid.steps);
    out.dW.resize(steps);
    out.dY.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        out.dW[k] = path.dW[2 * k] + path.dW[2 * k + 1];
        out.dY[k] = path.dY[2 * k] + path.dY[2 * k + 1];
    }
    return out;
}

void write_path_csv(const SamplePath& path, std::ostream& out) {
    out << "t,dW,dY,X\n";
    char line[128];
    for (std::int64_t k = 0; k < path.grid.steps; ++k) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n",
                      path.grid.time(k), path.dW[static_cast<std::size_t>(k)],
                      path.dY[static_cast<std::size_t>(k)], path.signal_at(k));
        out << line;
    }
}

}  // namespace qdd
