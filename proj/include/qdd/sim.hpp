#pragma once

#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "qdd/grid.hpp"
#include "qdd/model.hpp"
#include "qdd/rng.hpp"

namespace qdd {

// One simulated scenario on a uniform grid. dY_k covers [t_k, t_{k+1});
// the drift contribution in the step containing Theta uses the exact
// fractional overlap, so dY_k = B * ((t_{k+1}-Theta)^+ ^ dt) + sigma(t_k) dW_k.
struct SamplePath {
    double theta = 0.0;
    double magnitude = 0.0;
    TimeGrid grid;
    std::vector<double> dW;
    std::vector<double> dY;
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;

    // Signal value at the left endpoint t_k.
    double signal_at(std::int64_t k) const {
        return theta <= grid.time(k) ? magnitude : 0.0;
    }
};

// Read-only per-(model, grid) tables shared across paths and threads.
struct GridCache {
    TimeGrid grid;
    std::vector<double> sigma;       // sigma(t_k), k = 0..steps-1
    std::vector<double> sig2inv;     // 1 / sigma(t_k)^2
    std::vector<double> lambda;      // hazard(t_k), k = 0..steps
    std::vector<double> exp_neg_dh;  // exp(-(H(t_{k+1}) - H(t_k)))

    GridCache(const ModelSpec& model, const TimeGrid& g);
};

// Lazy scenario stream: Theta and B are drawn up front from their own
// substreams, observation increments are produced step by step so consumers
// that stop early never pay for the tail of the path. Increment k must be
// requested in order k = 0, 1, 2, ...
class ScenarioGen {
public:
    ScenarioGen(const ModelSpec& model, const GridCache& cache,
                std::uint64_t master_seed, std::uint64_t path_index);

    // Mismatched-disorder coupling: Theta_l from the same uniform under an
    // exponential tail with rate lambda_l; drift l after Theta_l. Shares the
    // Brownian stream with the primary scenario.
    ScenarioGen(const ModelSpec& model, const GridCache& cache,
                std::uint64_t master_seed, std::uint64_t path_index,
                double mismatch_drift, double mismatch_rate);

    double theta() const { return theta_; }
    double magnitude() const { return magnitude_; }

    // Produces (dW_k, dY_k); k must advance sequentially from zero.
    void step(std::int64_t k, double& dw, double& dy) {
        const double dt = cache_->grid.dt;
        dw = std::sqrt(dt) * noise_.next_normal();
        const double overlap =
            std::clamp(cache_->grid.time(k + 1) - theta_, 0.0, dt);
        dy = magnitude_ * overlap + cache_->sigma[static_cast<std::size_t>(k)] * dw;
    }

private:
    const GridCache* cache_;
    double theta_;
    double magnitude_;
    StreamSampler noise_;
};

// Fully determined by (master_seed, path_index): Theta by inverse CDF, then
// the magnitude from prior0 or prior1, then the Brownian increments.
SamplePath simulate_scenario(const ModelSpec& model, const TimeGrid& grid,
                             std::uint64_t master_seed,
                             std::uint64_t path_index);

// Same, with coupled mismatched scenario (drift l after Theta_l >= Theta,
// Theta_l exponential with rate lambda_l <= lambda, shared noise).
// Requires a constant-parameter model; throws RateOrderError otherwise.
std::pair<SamplePath, SamplePath> coupled_scenarios(
    const ModelSpec& model, double mismatch_drift, double mismatch_rate,
    const TimeGrid& grid, std::uint64_t master_seed, std::uint64_t path_index);

// Halve the resolution: pairs of increments are merged. Used by the
// dt-refinement studies so every resolution sees the same underlying scenario.
SamplePath coarsen(const SamplePath& path);

void write_path_csv(const SamplePath& path, std::ostream& out);

}  // namespace qdd
