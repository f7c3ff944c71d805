#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qdd/grid.hpp"
#include "qdd/model.hpp"
#include "qdd/shiryaev.hpp"

namespace qdd {

// Stop at a fixed time t (clamped to the horizon).
struct FixedTime {
    double t = 0.0;
};

// Stop when the correctly specified posterior disorder probability under the
// true model reaches level a.
struct ThresholdOnTrue {
    double a = 1.0;
};

// Stop when the one-dimensional statistic of the classical model
// (drift, rate) computed from the observations reaches level a.
struct ThresholdMismatched {
    double drift = 1.0;
    double rate = 1.0;
    double a = 1.0;
};

using StrategySpec = std::variant<FixedTime, ThresholdOnTrue, ThresholdMismatched>;

struct RiskEstimate {
    double mean = 0.0;
    double half_width = 0.0;  // 99% CI, z = 2.576
    double se = 0.0;
    double false_alarm_rate = 0.0;
    double mean_delay = 0.0;
    std::int64_t n_paths = 0;
    std::int64_t truncated = 0;
    bool horizon_warning = false;  // more than 1% of paths hit the horizon
    TimeGrid grid;
};

inline constexpr double kRiskZ = 2.576;

// Monte Carlo Bayes risk of a stopping strategy. Common random numbers: two
// calls with the same (master_seed, n_paths, grid) consume identical scenario
// randomness regardless of the model or strategy, and the result does not
// depend on the thread count.
RiskEstimate estimate_risk(const ModelSpec& model, const StrategySpec& strategy,
                           const TimeGrid& grid, std::int64_t n_paths,
                           std::uint64_t master_seed, int threads = 0);

// Statistic a threshold scan stops on.
struct TrueStat {};
struct MismatchStat {
    double drift = 1.0;
    double rate = 1.0;
};
using ScanStatistic = std::variant<TrueStat, MismatchStat>;

// One pass over the paths produces risks for every (threshold, cost schedule)
// pair: stopping times do not depend on the cost, so cost sweeps are free.
struct ScanTable {
    std::vector<double> thresholds;
    std::size_t n_costs = 1;
    std::vector<RiskEstimate> estimates;  // [threshold][cost], row-major

    const RiskEstimate& at(std::size_t threshold_idx, std::size_t cost_idx = 0) const {
        return estimates[threshold_idx * n_costs + cost_idx];
    }
};

ScanTable scan_thresholds(const ModelSpec& model, const ScanStatistic& stat,
                          const std::vector<double>& thresholds,
                          const std::vector<Schedule>& costs,
                          const TimeGrid& grid, std::int64_t n_paths,
                          std::uint64_t master_seed, int threads = 0);

struct Bracket {
    double lo = 0.02;
    double hi = 0.98;
};

struct OptimizeResult {
    double a_star = 0.0;
    RiskEstimate best;
    ScanTable coarse;
    std::optional<ScanTable> fine;
};

// Best scalar threshold on the true posterior statistic: a 61-point CRN scan
// over the bracket, optionally refined by a second 61-point scan around the
// coarse minimizer. Throws FlatObjectiveError when the scan cannot resolve a
// minimum at this budget. The resulting risk is an upper bound for the
// optimal-stopping value.
OptimizeResult optimize_threshold(const ModelSpec& model, const TimeGrid& grid,
                                  std::int64_t n_paths,
                                  std::uint64_t master_seed,
                                  const Bracket& bracket = {},
                                  bool refine = true, int threads = 0);

// Everything needed to check the misspecification bounds on one model:
// mismatched-filter rule at a_l, the same-threshold rule on the true
// posterior, the mismatched-at-r rule, the best-threshold upper bound and the
// two classical solver values.
struct RobustnessReport {
    double a_l = 0.0, a_r = 0.0;
    double u_l = 0.0, u_r = 0.0;  // classical values at pi_tilde
    double correction = 0.0;      // c (lambda - lambda_l) / (lambda lambda_l) (1 - pi)
    RiskEstimate v_mu_delta_l;    // tau from g_l >= a_l
    RiskEstimate v_gamma;         // tau from true posterior >= a_l
    RiskEstimate v_mu_delta_r;    // tau from g_r >= a_r
    OptimizeResult v_mu_upper;    // best-threshold upper bound for V^mu
};

RobustnessReport robustness_risks(const ModelSpec& model, double drift_l,
                                  double rate_l, double drift_r, double rate_r,
                                  const TimeGrid& grid, std::int64_t n_paths,
                                  std::uint64_t master_seed, int threads = 0);

namespace reference {

// Straight-line serial estimator that materializes each path and filters the
// whole trajectory before looking for the stopping time. Same losses as the
// fused kernel, bit for bit; kept as its oracle.
RiskEstimate estimate_risk_serial(const ModelSpec& model,
                                  const StrategySpec& strategy,
                                  const TimeGrid& grid, std::int64_t n_paths,
                                  std::uint64_t master_seed);

}  // namespace reference

}  // namespace qdd
