#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "qdd/model.hpp"
#include "qdd/sim.hpp"

namespace qdd {

// Posterior trajectory on the grid nodes t_0..t_steps.
struct PosteriorPath {
    TimeGrid grid;
    std::size_t n = 0;
    std::vector<double> pi;        // (steps+1) x n, row-major
    std::vector<double> pi_tilde;  // steps+1
    std::vector<double> x_hat;     // steps+1

    double component(std::int64_t k, std::size_t i) const {
        return pi[static_cast<std::size_t>(k) * n + i];
    }
};

// Streaming evaluation of the conditional atom probabilities from the
// observation increments. State per atom: likelihood mass for "disorder at
// zero" and the trapezoid-accumulated mass for "disorder in (0, t]", plus the
// not-yet-disordered survival mass; everything is renormalized to total one
// each step, so the posterior components can be read off directly and the
// exponents never leave a safe range. One exp per atom per step.
class ExactFilter {
public:
    ExactFilter(const ModelSpec& model, const GridCache& cache);

    void reset();

    // Consume dY over [t_k, t_{k+1}); k advances sequentially from zero.
    void advance(std::int64_t k, double dy) {
        const std::size_t kk = static_cast<std::size_t>(k);
        const double dt = cache_->grid.dt;
        const double u = cache_->sig2inv[kk] * dy;
        const double v = cache_->sig2inv[kk] * dt;
        const double surv_next = ss_ * cache_->exp_neg_dh[kk];
        const double half_in = 0.5 * dt * cache_->lambda[kk] * ss_;
        const double half_out = 0.5 * dt * cache_->lambda[kk + 1] * surv_next;
        double z = surv_next;
        const std::size_t n = b_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(b_[i] * u - bb_half_[i] * v);
            rr_[i] *= e;
            aa_[i] = (aa_[i] + p1_[i] * half_in) * e + p1_[i] * half_out;
            z += rr_[i] + aa_[i];
        }
        const double inv = 1.0 / z;
        for (std::size_t i = 0; i < n; ++i) {
            rr_[i] *= inv;
            aa_[i] *= inv;
        }
        ss_ = surv_next * inv;
    }

    double pi_tilde() const { return 1.0 - ss_; }
    double component(std::size_t i) const { return rr_[i] + aa_[i]; }
    double x_hat() const {
        double s = 0.0;
        for (std::size_t i = 0; i < b_.size(); ++i)
            s += b_[i] * (rr_[i] + aa_[i]);
        return s;
    }
    std::size_t n_atoms() const { return b_.size(); }

private:
    const GridCache* cache_;
    std::vector<double> b_, bb_half_, p0_, p1_;
    double pi0_;
    std::vector<double> rr_, aa_;
    double ss_ = 1.0;
};

// One-dimensional statistic g_l: the posterior of a classical model with
// deterministic drift l and exponential disorder rate lambda_l, evaluated
// along an arbitrary observation path. Deliberately a standalone scalar
// implementation, not a special case of ExactFilter.
class MismatchFilter {
public:
    MismatchFilter(double drift, double rate, double sigma, double pi_tilde,
                   double dt);

    void advance(double dy) {
        const double e = std::exp(a1_ * dy - b1_);
        const double surv_next = ss_ * decay_;
        const double half_in = half_dt_rate_ * ss_;
        const double half_out = half_dt_rate_ * surv_next;
        rr_ *= e;
        aa_ = (aa_ + half_in) * e + half_out;
        const double inv = 1.0 / (rr_ + aa_ + surv_next);
        rr_ *= inv;
        aa_ *= inv;
        ss_ = surv_next * inv;
    }

    double value() const { return 1.0 - ss_; }
    void reset();

private:
    double a1_, b1_, decay_, half_dt_rate_, pi0_;
    double rr_, aa_, ss_;
};

// Trajectory of the exact posterior along a materialized path.
PosteriorPath filter_exact(const ModelSpec& model, const SamplePath& path);

// Euler scheme on the posterior SDE driven by the innovation increments
// computed from the observations alone; components clamped/projected onto the
// capped simplex after every step.
PosteriorPath filter_sde(const ModelSpec& model, const SamplePath& path);

// g_l along the given path (values at nodes t_0..t_steps). Requires the
// path's sigma to be the constant passed here.
std::vector<double> shiryaev_filter(double drift, double rate, double sigma,
                                    double pi_tilde, const SamplePath& path);

struct TowerRow {
    double t = 0.0;
    double mc_mean = 0.0;
    double se = 0.0;
    double cdf = 0.0;
};

// Monte Carlo check of E[Pi_tilde_t] = P(Theta <= t) at the given grid-aligned
// checkpoints.
std::vector<TowerRow> posterior_mean_check(const ModelSpec& model,
                                           std::int64_t n_paths,
                                           const TimeGrid& grid,
                                           std::uint64_t master_seed,
                                           const std::vector<double>& times,
                                           int threads = 0);

namespace reference {

// Direct log-space evaluation of the posterior formula: per output node the
// disorder-time integral is re-evaluated with trapezoid weights under a
// running-max log-sum-exp. O(n * steps^2); kept as the serial oracle for the
// streaming kernel.
PosteriorPath filter_exact_logspace(const ModelSpec& model,
                                    const SamplePath& path);

}  // namespace reference

}  // namespace qdd
