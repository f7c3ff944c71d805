#include "qdd/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace qdd {

namespace {

std::size_t segment_index(const std::vector<double>& breaks, double t) {
    return static_cast<std::size_t>(
        std::upper_bound(breaks.begin(), breaks.end(), t) - breaks.begin());
}

}  // namespace

double DisorderLaw::hazard(double t) const {
    if (is_exponential()) return exponential_rate();
    const auto& pw = std::get<PiecewiseHazardTail>(tail);
    return pw.rates[segment_index(pw.breaks, t)];
}

double DisorderLaw::cumulative_hazard(double t) const {
    if (t <= 0.0) return 0.0;
    if (is_exponential()) return exponential_rate() * t;
    const auto& pw = std::get<PiecewiseHazardTail>(tail);
    double h = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < pw.breaks.size(); ++j) {
        if (t <= pw.breaks[j]) return h + pw.rates[j] * (t - prev);
        h += pw.rates[j] * (pw.breaks[j] - prev);
        prev = pw.breaks[j];
    }
    return h + pw.rates.back() * (t - prev);
}

double DisorderLaw::tail_cdf(double t) const {
    if (t <= 0.0) return 0.0;
    return -std::expm1(-cumulative_hazard(t));
}

double DisorderLaw::tail_quantile(double q) const {
    if (q <= 0.0) return 0.0;
    const double target = -std::log1p(-q);  // cumulative hazard to reach
    if (is_exponential()) return target / exponential_rate();
    const auto& pw = std::get<PiecewiseHazardTail>(tail);
    double h = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < pw.breaks.size(); ++j) {
        const double h_next = h + pw.rates[j] * (pw.breaks[j] - prev);
        if (target <= h_next) return prev + (target - h) / pw.rates[j];
        h = h_next;
        prev = pw.breaks[j];
    }
    return prev + (target - h) / pw.rates.back();
}

double DisorderLaw::tail_mean() const {
    if (is_exponential()) return 1.0 / exponential_rate();
    const auto& pw = std::get<PiecewiseHazardTail>(tail);
    double mean = 0.0;
    double h = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < pw.breaks.size(); ++j) {
        const double dt = pw.breaks[j] - prev;
        mean += std::exp(-h) * -std::expm1(-pw.rates[j] * dt) / pw.rates[j];
        h += pw.rates[j] * dt;
        prev = pw.breaks[j];
    }
    mean += std::exp(-h) / pw.rates.back();
    return mean;
}

double DisorderLaw::cdf(double t) const {
    if (t < 0.0) return 0.0;
    return pi_tilde + (1.0 - pi_tilde) * tail_cdf(t);
}

double DisorderLaw::sample_theta(double u) const {
    if (u < pi_tilde) return 0.0;
    return tail_quantile((u - pi_tilde) / (1.0 - pi_tilde));
}

double Schedule::value(double t) const {
    return values[segment_index(breaks, t)];
}

double Schedule::integral(double t) const {
    if (t <= 0.0) return 0.0;
    if (is_constant()) return values.front() * t;
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < breaks.size(); ++j) {
        if (t <= breaks[j]) return acc + values[j] * (t - prev);
        acc += values[j] * (breaks[j] - prev);
        prev = breaks[j];
    }
    return acc + values.back() * (t - prev);
}

double Schedule::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

Schedule Schedule::scaled(double factor) const {
    Schedule out = *this;
    for (double& v : out.values) v *= factor;
    return out;
}

double hazard(const DisorderLaw& law, double t) { return law.hazard(t); }

double disorder_cdf(const DisorderLaw& law, double t) { return law.cdf(t); }

double default_horizon(const ModelSpec& model, double dt) {
    const double target = 8.0 * model.disorder.tail_mean();
    return std::ceil(target / dt) * dt;
}

namespace {

void check_schedule(const Schedule& s, const char* code, const char* what,
                    std::vector<std::string>& issues) {
    if (s.values.empty() || s.values.size() != s.breaks.size() + 1) {
        issues.push_back(std::string(code) + ": malformed " + what +
                         " schedule (need breaks.size()+1 values)");
        return;
    }
    for (double v : s.values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            issues.push_back(std::string(code) + ": " + what +
                             " values must be strictly positive");
            break;
        }
    }
    for (std::size_t j = 1; j < s.breaks.size(); ++j) {
        if (!(s.breaks[j] > s.breaks[j - 1])) {
            issues.push_back(std::string(code) + ": " + what +
                             " breakpoints must be strictly increasing");
            break;
        }
    }
    if (!s.breaks.empty() && !(s.breaks.front() > 0.0))
        issues.push_back(std::string(code) + ": " + what +
                         " breakpoints must be positive");
}

void renormalize(DriftPrior& prior) {
    double s = 0.0;
    for (double w : prior.p) s += w;
    if (s == 1.0) return;
    for (double& w : prior.p) w /= s;
    for (int pass = 0; pass < 10; ++pass) {
        double s2 = 0.0;
        for (double w : prior.p) s2 += w;
        if (s2 == 1.0) break;
        auto it = std::max_element(prior.p.begin(), prior.p.end());
        *it += 1.0 - s2;
    }
}

void check_prior(const DriftPrior& prior, const char* which,
                 std::vector<std::string>& issues) {
    if (prior.b.empty())
        issues.push_back(std::string("ZeroMagnitude: ") + which +
                         " has no atoms");
    if (prior.p.size() != prior.b.size()) {
        issues.push_back(std::string("WeightSum: ") + which +
                         " atom/weight count mismatch");
        return;
    }
    for (double b : prior.b)
        if (b == 0.0 || !std::isfinite(b)) {
            issues.push_back(std::string("ZeroMagnitude: ") + which +
                             " contains a zero or non-finite magnitude");
            break;
        }
    for (std::size_t i = 0; i < prior.b.size(); ++i)
        for (std::size_t j = i + 1; j < prior.b.size(); ++j)
            if (prior.b[i] == prior.b[j]) {
                issues.push_back(std::string("DuplicateMagnitude: ") + which +
                                 " has repeated atoms");
                i = prior.b.size();
                break;
            }
    double sum = 0.0;
    bool neg = false;
    for (double w : prior.p) {
        if (w < 0.0 || !std::isfinite(w)) neg = true;
        sum += w;
    }
    if (neg)
        issues.push_back(std::string("WeightSum: ") + which +
                         " has negative weights");
    else if (std::fabs(sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "WeightSum: " << which << " weights sum to " << sum;
        issues.push_back(os.str());
    }
}

}  // namespace

ModelSpec validate(ModelSpec spec) {
    std::vector<std::string> issues;

    check_prior(spec.prior0, "prior0", issues);
    check_prior(spec.prior1, "prior1", issues);
    if (spec.prior0.b != spec.prior1.b)
        issues.push_back("AtomMismatch: prior0 and prior1 must share one atom set");

    if (!(spec.disorder.pi_tilde >= 0.0 && spec.disorder.pi_tilde <= 1.0))
        issues.push_back("BadHazard: pi_tilde outside [0,1]");
    if (spec.disorder.is_exponential()) {
        if (!(spec.disorder.exponential_rate() > 0.0))
            issues.push_back("BadHazard: exponential rate must be positive");
    } else {
        const auto& pw = std::get<PiecewiseHazardTail>(spec.disorder.tail);
        if (pw.rates.size() != pw.breaks.size() + 1)
            issues.push_back("BadHazard: need breaks.size()+1 rates");
        for (double r : pw.rates)
            if (!(r > 0.0) || !std::isfinite(r)) {
                issues.push_back("BadHazard: rates must be strictly positive");
                break;
            }
        for (std::size_t j = 0; j < pw.breaks.size(); ++j) {
            const double prev = j == 0 ? 0.0 : pw.breaks[j - 1];
            if (!(pw.breaks[j] > prev)) {
                issues.push_back(
                    "BadHazard: breakpoints must be positive and increasing");
                break;
            }
        }
    }

    check_schedule(spec.sigma, "NonPositiveSigma", "sigma", issues);
    check_schedule(spec.cost, "NonPositiveCost", "cost", issues);

    if (!issues.empty()) throw ValidationError(std::move(issues));

    renormalize(spec.prior0);
    renormalize(spec.prior1);
    return spec;
}

namespace {

using nlohmann::json;

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw InputError(std::string("unknown key '") + it.key() + "' in " +
                             where);
    }
}

Schedule parse_schedule(const json& j, const char* where) {
    if (j.is_number()) return Schedule::constant(j.get<double>());
    if (!j.is_object())
        throw InputError(std::string(where) +
                         " must be a number or {breaks, values}");
    require_keys(j, {"breaks", "values"}, where);
    Schedule s;
    s.breaks = j.at("breaks").get<std::vector<double>>();
    s.values = j.at("values").get<std::vector<double>>();
    return s;
}

}  // namespace

ModelSpec parse_model_json(const nlohmann::json& j) {
    require_keys(j, {"atoms", "pi_tilde", "disorder", "sigma", "cost"}, "model");
    ModelSpec m;
    for (const auto& atom : j.at("atoms")) {
        require_keys(atom, {"b", "p0", "p1"}, "atoms[]");
        m.prior0.b.push_back(atom.at("b").get<double>());
        m.prior1.b.push_back(atom.at("b").get<double>());
        m.prior0.p.push_back(atom.at("p0").get<double>());
        m.prior1.p.push_back(atom.at("p1").get<double>());
    }
    m.disorder.pi_tilde = j.at("pi_tilde").get<double>();
    const auto& dis = j.at("disorder");
    require_keys(dis, {"type", "rate", "breaks", "rates"}, "disorder");
    const std::string type = dis.at("type").get<std::string>();
    if (type == "exponential") {
        m.disorder.tail = ExponentialTail{dis.at("rate").get<double>()};
    } else if (type == "piecewise") {
        PiecewiseHazardTail pw;
        pw.breaks = dis.at("breaks").get<std::vector<double>>();
        pw.rates = dis.at("rates").get<std::vector<double>>();
        m.disorder.tail = pw;
    } else {
        throw InputError("disorder type must be 'exponential' or 'piecewise'");
    }
    m.sigma = parse_schedule(j.at("sigma"), "sigma");
    m.cost = parse_schedule(j.at("cost"), "cost");
    return validate(std::move(m));
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("bad JSON in " + path + ": " + e.what());
    }
    return parse_model_json(j);
}

nlohmann::json model_to_json(const ModelSpec& model) {
    json atoms = json::array();
    for (std::size_t i = 0; i < model.n(); ++i)
        atoms.push_back({{"b", model.prior1.b[i]},
                         {"p0", model.prior0.p[i]},
                         {"p1", model.prior1.p[i]}});
    json dis;
    if (model.disorder.is_exponential()) {
        dis = {{"type", "exponential"},
               {"rate", model.disorder.exponential_rate()}};
    } else {
        const auto& pw = std::get<PiecewiseHazardTail>(model.disorder.tail);
        dis = {{"type", "piecewise"}, {"breaks", pw.breaks}, {"rates", pw.rates}};
    }
    auto sched = [](const Schedule& s) -> json {
        if (s.is_constant()) return s.constant_value();
        return {{"breaks", s.breaks}, {"values", s.values}};
    };
    return {{"atoms", atoms},
            {"pi_tilde", model.disorder.pi_tilde},
            {"disorder", dis},
            {"sigma", sched(model.sigma)},
            {"cost", sched(model.cost)}};
}

}  // namespace qdd
