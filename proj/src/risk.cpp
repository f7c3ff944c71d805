#include "qdd/risk.hpp"

#include <algorithm>
#include <cmath>

#include "qdd/filter.hpp"
#include "qdd/numerics.hpp"
#include "qdd/parallel.hpp"
#include "qdd/sim.hpp"

namespace qdd {

namespace {

constexpr std::int64_t kBlock = 256;

struct StatSums {
    double fa = 0.0;
    double delay = 0.0;
    double loss_sq = 0.0;
    std::int64_t truncated = 0;

    void add(double fa_i, double delay_i, bool trunc) {
        fa += fa_i;
        delay += delay_i;
        const double loss = fa_i + delay_i;
        loss_sq += loss * loss;
        truncated += trunc ? 1 : 0;
    }
    void merge(const StatSums& o) {
        fa += o.fa;
        delay += o.delay;
        loss_sq += o.loss_sq;
        truncated += o.truncated;
    }
};

RiskEstimate to_estimate(const StatSums& s, std::int64_t n,
                         const TimeGrid& grid) {
    RiskEstimate e;
    e.n_paths = n;
    e.grid = grid;
    e.truncated = s.truncated;
    e.false_alarm_rate = s.fa / static_cast<double>(n);
    e.mean_delay = s.delay / static_cast<double>(n);
    e.mean = e.false_alarm_rate + e.mean_delay;
    const double var =
        n > 1 ? std::max(0.0, (s.loss_sq - static_cast<double>(n) * e.mean *
                                               e.mean) /
                                  static_cast<double>(n - 1))
              : 0.0;
    e.se = std::sqrt(var / static_cast<double>(n));
    e.half_width = kRiskZ * e.se;
    e.horizon_warning = s.truncated * 100 > n;
    return e;
}

// Deterministic map-reduce over paths: fixed blocks, per-block partial sums,
// combined in block order no matter which thread ran which block. The functor
// sees a whole block so per-path state (filters, scratch) is hoisted.
template <class PerBlock>
std::vector<StatSums> accumulate_paths(std::int64_t n_paths, std::size_t m,
                                       int threads, PerBlock&& per_block) {
    const std::int64_t blocks = (n_paths + kBlock - 1) / kBlock;
    std::vector<StatSums> slots(static_cast<std::size_t>(blocks) * m);
    for_each_block(n_paths, kBlock, threads,
                   [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
                       per_block(lo, hi,
                                 &slots[static_cast<std::size_t>(b) * m]);
                   });
    std::vector<StatSums> out(m);
    for (std::int64_t b = 0; b < blocks; ++b)
        for (std::size_t j = 0; j < m; ++j)
            out[j].merge(slots[static_cast<std::size_t>(b) * m + j]);
    return out;
}

double delay_cost(const Schedule& cost, double tau, double theta) {
    return tau > theta ? cost.integral(tau) - cost.integral(theta) : 0.0;
}

void validate_strategy(const StrategySpec& strategy) {
    if (const auto* f = std::get_if<FixedTime>(&strategy)) {
        if (!(f->t >= 0.0))
            throw std::invalid_argument("FixedTime: t must be >= 0");
    } else if (const auto* t = std::get_if<ThresholdOnTrue>(&strategy)) {
        if (!(t->a > 0.0 && t->a <= 1.0))
            throw std::invalid_argument("ThresholdOnTrue: a must be in (0,1]");
    } else if (const auto* mm = std::get_if<ThresholdMismatched>(&strategy)) {
        if (!(mm->a > 0.0 && mm->a <= 1.0) || mm->drift == 0.0 ||
            !(mm->rate > 0.0))
            throw std::invalid_argument(
                "ThresholdMismatched: need a in (0,1], drift != 0, rate > 0");
    }
}

}  // namespace

RiskEstimate estimate_risk(const ModelSpec& model, const StrategySpec& strategy,
                           const TimeGrid& grid, std::int64_t n_paths,
                           std::uint64_t master_seed, int threads) {
    validate_strategy(strategy);
    GridCache cache(model, grid);
    const double horizon = grid.horizon;
    std::vector<StatSums> sums;

    if (const auto* fixed = std::get_if<FixedTime>(&strategy)) {
        const double tau = std::min(fixed->t, horizon);
        const bool trunc = fixed->t > horizon;
        sums = accumulate_paths(
            n_paths, 1, threads,
            [&](std::int64_t lo, std::int64_t hi, StatSums* local) {
                for (std::int64_t p = lo; p < hi; ++p) {
                    ScenarioGen gen(model, cache, master_seed,
                                    static_cast<std::uint64_t>(p));
                    const double theta = gen.theta();
                    local->add(tau < theta ? 1.0 : 0.0,
                               delay_cost(model.cost, tau, theta), trunc);
                }
            });
    } else if (const auto* thr = std::get_if<ThresholdOnTrue>(&strategy)) {
        const double a = thr->a;
        sums = accumulate_paths(
            n_paths, 1, threads,
            [&](std::int64_t lo, std::int64_t hi, StatSums* local) {
                ExactFilter filter(model, cache);
                for (std::int64_t p = lo; p < hi; ++p) {
                    filter.reset();
                    ScenarioGen gen(model, cache, master_seed,
                                    static_cast<std::uint64_t>(p));
                    double tau = filter.pi_tilde() >= a ? 0.0 : -1.0;
                    std::int64_t k = 0;
                    while (tau < 0.0 && k < grid.steps) {
                        double dw, dy;
                        gen.step(k, dw, dy);
                        filter.advance(k, dy);
                        ++k;
                        if (filter.pi_tilde() >= a) tau = grid.time(k);
                    }
                    const bool trunc = tau < 0.0;
                    if (trunc) tau = horizon;
                    const double theta = gen.theta();
                    local->add(tau < theta ? 1.0 : 0.0,
                               delay_cost(model.cost, tau, theta), trunc);
                }
            });
    } else {
        const auto& mm = std::get<ThresholdMismatched>(strategy);
        if (!model.sigma.is_constant())
            throw std::invalid_argument(
                "ThresholdMismatched needs constant sigma");
        const double sigma = model.sigma.constant_value();
        const double pi0 = model.disorder.pi_tilde;
        sums = accumulate_paths(
            n_paths, 1, threads,
            [&](std::int64_t lo, std::int64_t hi, StatSums* local) {
                MismatchFilter filter(mm.drift, mm.rate, sigma, pi0, grid.dt);
                for (std::int64_t p = lo; p < hi; ++p) {
                    filter.reset();
                    ScenarioGen gen(model, cache, master_seed,
                                    static_cast<std::uint64_t>(p));
                    double tau = filter.value() >= mm.a ? 0.0 : -1.0;
                    std::int64_t k = 0;
                    while (tau < 0.0 && k < grid.steps) {
                        double dw, dy;
                        gen.step(k, dw, dy);
                        filter.advance(dy);
                        ++k;
                        if (filter.value() >= mm.a) tau = grid.time(k);
                    }
                    const bool trunc = tau < 0.0;
                    if (trunc) tau = horizon;
                    const double theta = gen.theta();
                    local->add(tau < theta ? 1.0 : 0.0,
                               delay_cost(model.cost, tau, theta), trunc);
                }
            });
    }
    return to_estimate(sums[0], n_paths, grid);
}

ScanTable scan_thresholds(const ModelSpec& model, const ScanStatistic& stat,
                          const std::vector<double>& thresholds,
                          const std::vector<Schedule>& costs,
                          const TimeGrid& grid, std::int64_t n_paths,
                          std::uint64_t master_seed, int threads) {
    if (thresholds.empty() ||
        !std::is_sorted(thresholds.begin(), thresholds.end()))
        throw std::invalid_argument("scan_thresholds: thresholds must be sorted");
    for (double a : thresholds)
        if (!(a > 0.0 && a <= 1.0))
            throw std::invalid_argument("scan_thresholds: levels in (0,1]");
    if (costs.empty())
        throw std::invalid_argument("scan_thresholds: need a cost schedule");
    const bool mismatch = std::holds_alternative<MismatchStat>(stat);
    if (mismatch && !model.sigma.is_constant())
        throw std::invalid_argument("mismatch statistic needs constant sigma");

    GridCache cache(model, grid);
    const std::size_t nj = thresholds.size();
    const std::size_t nc = costs.size();
    const double pi0 = model.disorder.pi_tilde;

    auto sums = accumulate_paths(
        n_paths, nj * nc, threads,
        [&](std::int64_t lo, std::int64_t hi, StatSums* local) {
            ExactFilter exact(model, cache);
            std::vector<double> tau(nj);
            for (std::int64_t p = lo; p < hi; ++p) {
                ScenarioGen gen(model, cache, master_seed,
                                static_cast<std::uint64_t>(p));
                std::fill(tau.begin(), tau.end(), -1.0);
                std::size_t next = 0;
                auto resolve = [&](double value, double t) {
                    while (next < nj && thresholds[next] <= value) {
                        tau[next] = t;
                        ++next;
                    }
                };
                if (mismatch) {
                    const auto& ms = std::get<MismatchStat>(stat);
                    MismatchFilter filter(ms.drift, ms.rate,
                                          model.sigma.constant_value(), pi0,
                                          grid.dt);
                    resolve(filter.value(), 0.0);
                    std::int64_t k = 0;
                    while (next < nj && k < grid.steps) {
                        double dw, dy;
                        gen.step(k, dw, dy);
                        filter.advance(dy);
                        ++k;
                        resolve(filter.value(), grid.time(k));
                    }
                } else {
                    exact.reset();
                    resolve(exact.pi_tilde(), 0.0);
                    std::int64_t k = 0;
                    while (next < nj && k < grid.steps) {
                        double dw, dy;
                        gen.step(k, dw, dy);
                        exact.advance(k, dy);
                        ++k;
                        resolve(exact.pi_tilde(), grid.time(k));
                    }
                }
                const double theta = gen.theta();
                for (std::size_t j = 0; j < nj; ++j) {
                    const bool trunc = tau[j] < 0.0;
                    const double t = trunc ? grid.horizon : tau[j];
                    const double fa = t < theta ? 1.0 : 0.0;
                    for (std::size_t c = 0; c < nc; ++c)
                        local[j * nc + c].add(
                            fa, delay_cost(costs[c], t, theta), trunc);
                }
            }
        });

    ScanTable table;
    table.thresholds = thresholds;
    table.n_costs = nc;
    table.estimates.reserve(nj * nc);
    for (std::size_t i = 0; i < nj * nc; ++i)
        table.estimates.push_back(to_estimate(sums[i], n_paths, grid));
    return table;
}

OptimizeResult optimize_threshold(const ModelSpec& model, const TimeGrid& grid,
                                  std::int64_t n_paths,
                                  std::uint64_t master_seed,
                                  const Bracket& bracket, bool refine,
                                  int threads) {
    if (!(bracket.lo > 0.0 && bracket.lo < bracket.hi && bracket.hi < 1.0))
        throw std::invalid_argument("optimize_threshold: bad bracket");
    constexpr int kScan = 61;
    const std::vector<Schedule> costs{model.cost};

    OptimizeResult result;
    result.coarse =
        scan_thresholds(model, TrueStat{}, linspace(bracket.lo, bracket.hi, kScan),
                        costs, grid, n_paths, master_seed, threads);

    auto argmin = [](const ScanTable& t) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < t.thresholds.size(); ++j)
            if (t.at(j).mean < t.at(best).mean) best = j;
        return best;
    };
    double mean_lo = result.coarse.at(0).mean, mean_hi = mean_lo, hw = 0.0;
    for (std::size_t j = 0; j < result.coarse.thresholds.size(); ++j) {
        mean_lo = std::min(mean_lo, result.coarse.at(j).mean);
        mean_hi = std::max(mean_hi, result.coarse.at(j).mean);
        hw = std::max(hw, result.coarse.at(j).half_width);
    }
    if (mean_hi - mean_lo < 2.0 * hw)
        throw FlatObjectiveError(
            "FlatObjective: threshold scan range below twice the CI width; "
            "raise n_paths or widen the bracket");

    const std::size_t m0 = argmin(result.coarse);
    result.a_star = result.coarse.thresholds[m0];
    result.best = result.coarse.at(m0);

    if (refine) {
        const double lo = result.coarse.thresholds[m0 > 0 ? m0 - 1 : 0];
        const double hi = result.coarse.thresholds[std::min(
            m0 + 1, result.coarse.thresholds.size() - 1)];
        result.fine =
            scan_thresholds(model, TrueStat{}, linspace(lo, hi, kScan), costs,
                            grid, n_paths, master_seed, threads);
        const std::size_t m1 = argmin(*result.fine);
        result.a_star = result.fine->thresholds[m1];
        result.best = result.fine->at(m1);
    }
    return result;
}

RobustnessReport robustness_risks(const ModelSpec& model, double drift_l,
                                  double rate_l, double drift_r, double rate_r,
                                  const TimeGrid& grid, std::int64_t n_paths,
                                  std::uint64_t master_seed, int threads) {
    if (!model.constant_parameters())
        throw std::invalid_argument("robustness_risks needs constant parameters");
    const double lambda = model.disorder.exponential_rate();
    if (rate_l > lambda)
        throw RateOrderError("RateOrder: rate_l must be <= model rate");
    if (rate_r < lambda)
        throw RateOrderError("RateOrder: rate_r must be >= model rate");
    const double sigma = model.sigma.constant_value();
    const double cost = model.cost.constant_value();
    const double pi0 = model.disorder.pi_tilde;

    RobustnessReport report;
    const auto sol_l = solve_shiryaev({drift_l, sigma, rate_l, cost});
    const auto sol_r = solve_shiryaev({drift_r, sigma, rate_r, cost});
    report.a_l = sol_l.threshold;
    report.a_r = sol_r.threshold;
    report.u_l = sol_l.value_at(pi0);
    report.u_r = sol_r.value_at(pi0);
    report.correction =
        cost * (lambda - rate_l) / (lambda * rate_l) * (1.0 - pi0);

    GridCache cache(model, grid);
    const double a_l = report.a_l, a_r = report.a_r;
    auto sums = accumulate_paths(
        n_paths, 3, threads,
        [&](std::int64_t lo, std::int64_t hi, StatSums* local) {
            ExactFilter ef(model, cache);
            for (std::int64_t p = lo; p < hi; ++p) {
                ef.reset();
                MismatchFilter fl(drift_l, rate_l, sigma, pi0, grid.dt);
                MismatchFilter fr(drift_r, rate_r, sigma, pi0, grid.dt);
                ScenarioGen gen(model, cache, master_seed,
                                static_cast<std::uint64_t>(p));
                double tau_ml = fl.value() >= a_l ? 0.0 : -1.0;
                double tau_g = ef.pi_tilde() >= a_l ? 0.0 : -1.0;
                double tau_mr = fr.value() >= a_r ? 0.0 : -1.0;
                std::int64_t k = 0;
                while ((tau_ml < 0.0 || tau_g < 0.0 || tau_mr < 0.0) &&
                       k < grid.steps) {
                    double dw, dy;
                    gen.step(k, dw, dy);
                    ++k;
                    const double t = grid.time(k);
                    if (tau_ml < 0.0) {
                        fl.advance(dy);
                        if (fl.value() >= a_l) tau_ml = t;
                    }
                    if (tau_g < 0.0) {
                        ef.advance(k - 1, dy);
                        if (ef.pi_tilde() >= a_l) tau_g = t;
                    }
                    if (tau_mr < 0.0) {
                        fr.advance(dy);
                        if (fr.value() >= a_r) tau_mr = t;
                    }
                }
                const double theta = gen.theta();
                const double taus[3] = {tau_ml, tau_g, tau_mr};
                for (int s = 0; s < 3; ++s) {
                    const bool trunc = taus[s] < 0.0;
                    const double t = trunc ? grid.horizon : taus[s];
                    local[s].add(t < theta ? 1.0 : 0.0,
                                 delay_cost(model.cost, t, theta), trunc);
                }
            }
        });
    report.v_mu_delta_l = to_estimate(sums[0], n_paths, grid);
    report.v_gamma = to_estimate(sums[1], n_paths, grid);
    report.v_mu_delta_r = to_estimate(sums[2], n_paths, grid);
    report.v_mu_upper = optimize_threshold(model, grid, n_paths, master_seed,
                                           Bracket{0.02, 0.98},
                                           /*refine=*/false, threads);
    return report;
}

namespace reference {

RiskEstimate estimate_risk_serial(const ModelSpec& model,
                                  const StrategySpec& strategy,
                                  const TimeGrid& grid, std::int64_t n_paths,
                                  std::uint64_t master_seed) {
    validate_strategy(strategy);
    const std::int64_t blocks = (n_paths + kBlock - 1) / kBlock;
    std::vector<StatSums> slots(static_cast<std::size_t>(blocks));
    for (std::int64_t p = 0; p < n_paths; ++p) {
        auto path = simulate_scenario(model, grid, master_seed,
                                      static_cast<std::uint64_t>(p));
        double tau = -1.0;
        bool trunc = false;
        if (const auto* fixed = std::get_if<FixedTime>(&strategy)) {
            tau = std::min(fixed->t, grid.horizon);
            trunc = fixed->t > grid.horizon;
        } else if (const auto* thr = std::get_if<ThresholdOnTrue>(&strategy)) {
            const auto posterior = filter_exact(model, path);
            for (std::int64_t k = 0; k <= grid.steps; ++k)
                if (posterior.pi_tilde[static_cast<std::size_t>(k)] >= thr->a) {
                    tau = grid.time(k);
                    break;
                }
        } else {
            const auto& mm = std::get<ThresholdMismatched>(strategy);
            const auto g =
                shiryaev_filter(mm.drift, mm.rate, model.sigma.constant_value(),
                                model.disorder.pi_tilde, path);
            for (std::int64_t k = 0; k <= grid.steps; ++k)
                if (g[static_cast<std::size_t>(k)] >= mm.a) {
                    tau = grid.time(k);
                    break;
                }
        }
        if (tau < 0.0) {
            tau = grid.horizon;
            trunc = true;
        }
        slots[static_cast<std::size_t>(p / kBlock)].add(
            tau < path.theta ? 1.0 : 0.0,
            delay_cost(model.cost, tau, path.theta), trunc);
    }
    StatSums total;
    for (const auto& s : slots) total.merge(s);
    return to_estimate(total, n_paths, grid);
}

}  // namespace reference

}  // namespace qdd
