#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "qdd/errors.hpp"

#include "json.hpp"

namespace qdd {

// Finitely supported drift-magnitude prior: atoms b_i with weights p_i.
struct DriftPrior {
    std::vector<double> b;
    std::vector<double> p;

    std::size_t size() const { return b.size(); }
};

struct ExponentialTail {
    double rate = 1.0;
};

// Hazard is rates[j] on [breaks[j-1], breaks[j]) with breaks[-1] = 0 and an
// unbounded last segment; right-continuous in t.
struct PiecewiseHazardTail {
    std::vector<double> breaks;
    std::vector<double> rates;  // size breaks.size() + 1
};

// Disorder time law: atom of mass pi_tilde at zero plus a tail on (0, inf)
// described through its hazard rate.
struct DisorderLaw {
    double pi_tilde = 0.0;
    std::variant<ExponentialTail, PiecewiseHazardTail> tail =
        ExponentialTail{1.0};

    bool is_exponential() const {
        return std::holds_alternative<ExponentialTail>(tail);
    }
    double exponential_rate() const {
        return std::get<ExponentialTail>(tail).rate;
    }

    double hazard(double t) const;
    double cumulative_hazard(double t) const;
    double tail_cdf(double t) const;      // F_nu
    double tail_quantile(double q) const; // F_nu^{-1}, q in [0,1)
    double tail_mean() const;
    double cdf(double t) const;           // P(Theta <= t)
    // Inverse-CDF sample of Theta from one uniform.
    double sample_theta(double u) const;
};

// Deterministic positive step function used for sigma(.) and c(.).
struct Schedule {
    std::vector<double> breaks;
    std::vector<double> values;  // size breaks.size() + 1

    static Schedule constant(double v) { return Schedule{{}, {v}}; }

    bool is_constant() const { return breaks.empty(); }
    double constant_value() const { return values.front(); }
    double value(double t) const;
    double integral(double t) const;  // int_0^t value(u) du
    double max_value() const;
    Schedule scaled(double factor) const;
};

struct ModelSpec {
    DriftPrior prior0;  // magnitudes if the disorder predates observation
    DriftPrior prior1;  // magnitudes if the disorder happens while observing
    DisorderLaw disorder;
    Schedule sigma = Schedule::constant(1.0);
    Schedule cost = Schedule::constant(1.0);

    std::size_t n() const { return prior1.size(); }
    bool constant_parameters() const {
        return sigma.is_constant() && cost.is_constant() &&
               disorder.is_exponential();
    }
};

// Checks every invariant, throwing ValidationError with the full list of
// violations; on success returns the spec with weights renormalized so each
// prior sums to one exactly. Idempotent.
ModelSpec validate(ModelSpec spec);

// Free-function forms of the law accessors.
double hazard(const DisorderLaw& law, double t);
double disorder_cdf(const DisorderLaw& law, double t);

// Horizon used when a caller does not pin one: eight mean disorder times,
// rounded up to a multiple of dt.
double default_horizon(const ModelSpec& model, double dt);

// Model files: JSON with keys atoms ({b, p0, p1} array), pi_tilde, disorder,
// sigma, cost. Unknown keys are rejected.
ModelSpec parse_model_json(const nlohmann::json& j);
ModelSpec load_model(const std::string& path);
nlohmann::json model_to_json(const ModelSpec& model);

}  // namespace qdd
