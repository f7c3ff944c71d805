#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "qdd/model.hpp"
#include "qdd/quadrature.hpp"
#include "qdd/rng.hpp"

using namespace qdd;

namespace {

ModelSpec reference_n1() {
    ModelSpec m;
    m.prior0 = {{1.0}, {1.0}};
    m.prior1 = {{1.0}, {1.0}};
    m.disorder.pi_tilde = 0.2;
    m.disorder.tail = ExponentialTail{0.1};
    m.sigma = Schedule::constant(1.0);
    m.cost = Schedule::constant(1.0);
    return m;
}

bool mentions(const ValidationError& e, const std::string& code) {
    for (const auto& issue : e.issues())
        if (issue.find(code) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("valid model passes and weights renormalize") {
    auto m = validate(reference_n1());
    CHECK(m.n() == 1);
    CHECK(m.prior1.p[0] == 1.0);

    ModelSpec two = reference_n1();
    two.prior0 = {{0.5, 2.0}, {0.25, 0.75}};
    two.prior1 = {{0.5, 2.0}, {0.5, 0.5 + 4e-13}};
    auto v = validate(two);
    CHECK(v.prior1.p[0] + v.prior1.p[1] == 1.0);
}

TEST_CASE("validate reports every violation") {
    ModelSpec bad = reference_n1();
    bad.prior0 = {{0.0, 1.0}, {0.5, 0.4}};
    bad.prior1 = {{0.0, 1.0}, {0.5, 0.4}};
    bad.sigma = Schedule::constant(-1.0);
    bad.cost = Schedule::constant(0.0);
    bad.disorder.tail = ExponentialTail{-0.5};
    try {
        validate(bad);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(mentions(e, "ZeroMagnitude"));
        CHECK(mentions(e, "WeightSum"));
        CHECK(mentions(e, "NonPositiveSigma"));
        CHECK(mentions(e, "NonPositiveCost"));
        CHECK(mentions(e, "BadHazard"));
    }
}

TEST_CASE("validate is idempotent") {
    ModelSpec m = reference_n1();
    m.prior1.p = {1.0 - 3e-13};
    auto once = validate(m);
    auto twice = validate(once);
    CHECK(once.prior1.p == twice.prior1.p);
    CHECK(once.prior0.p == twice.prior0.p);
}

TEST_CASE("hazard of exponential and piecewise tails") {
    DisorderLaw exp_law{0.0, ExponentialTail{0.5}};
    CHECK(hazard(exp_law, 3.7) == 0.5);

    DisorderLaw pw{0.0, PiecewiseHazardTail{{1.0}, {0.2, 0.8}}};
    CHECK(hazard(pw, 0.5) == 0.2);
    CHECK(hazard(pw, 2.0) == 0.8);

    // F'/(1-F) recovered numerically from the cdf at random times.
    StreamSampler u(99, 0, 0);
    for (int i = 0; i < 10; ++i) {
        const double t = 0.1 + 20.0 * u.next_uniform();
        const double d = 1e-5;
        const double num = pw.tail_cdf(t + d) - pw.tail_cdf(t - d);
        const double den = 2 * d * (1.0 - pw.tail_cdf(t));
        if (std::fabs(t - 1.0) < 2 * d) continue;  // kink of the step hazard
        CHECK(num / den == doctest::Approx(hazard(pw, t)).epsilon(1e-6));
    }
}

TEST_CASE("disorder cdf values") {
    DisorderLaw law{0.3, ExponentialTail{2.0}};
    CHECK(disorder_cdf(law, 0.0) == doctest::Approx(0.3).epsilon(1e-15));

    DisorderLaw median{0.0, ExponentialTail{1.0}};
    CHECK(disorder_cdf(median, std::log(2.0)) ==
          doctest::Approx(0.5).epsilon(1e-12));

    DisorderLaw ref{0.2, ExponentialTail{0.1}};
    CHECK(disorder_cdf(ref, 10.0) ==
          doctest::Approx(0.7056964470628461).epsilon(1e-12));
}

TEST_CASE("cdf is consistent with integrated hazard") {
    const DisorderLaw laws[] = {
        {0.2, ExponentialTail{0.1}},
        {0.0, PiecewiseHazardTail{{1.0, 4.0}, {0.2, 0.8, 0.1}}},
        {0.7, PiecewiseHazardTail{{2.5}, {0.05, 0.4}}},
    };
    for (const auto& law : laws) {
        const double mean = law.tail_mean();
        for (int i = 1; i <= 10; ++i) {
            const double t = i * mean;
            const double integral = adaptive_quadrature(
                [&](double u) { return law.hazard(u); }, 0.0, t, 1e-13);
            const double expect =
                law.pi_tilde + (1.0 - law.pi_tilde) * -std::expm1(-integral);
            CHECK(law.cdf(t) == doctest::Approx(expect).epsilon(1e-8));
        }
        // Non-decreasing with limit one.
        double prev = -1.0;
        for (int i = 0; i <= 100; ++i) {
            const double v = law.cdf(i * 0.1 * mean);
            CHECK(v >= prev);
            prev = v;
        }
        CHECK(law.cdf(60.0 * mean) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("tail quantile inverts the tail cdf") {
    DisorderLaw pw{0.0, PiecewiseHazardTail{{1.0, 4.0}, {0.2, 0.8, 0.1}}};
    for (double q : {0.01, 0.2, 0.5, 0.9, 0.999}) {
        const double t = pw.tail_quantile(q);
        CHECK(pw.tail_cdf(t) == doctest::Approx(q).epsilon(1e-10));
    }
}

TEST_CASE("model json round trip and unknown keys") {
    ModelSpec m = reference_n1();
    m.prior0 = {{0.5, 2.0}, {0.3, 0.7}};
    m.prior1 = {{0.5, 2.0}, {0.5, 0.5}};
    m.sigma = Schedule{{2.0}, {1.0, 1.5}};
    const auto j = model_to_json(validate(m));
    const auto back = parse_model_json(j);
    CHECK(back.prior1.b == m.prior1.b);
    CHECK(back.sigma.values == m.sigma.values);

    auto bad = j;
    bad["volatility"] = 2.0;
    CHECK_THROWS_AS(parse_model_json(bad), InputError);

    auto bad2 = j;
    bad2["disorder"]["shape"] = 1.0;
    CHECK_THROWS_AS(parse_model_json(bad2), InputError);
}

TEST_CASE("schedule integral") {
    Schedule s{{1.0, 3.0}, {2.0, 0.5, 1.0}};
    CHECK(s.integral(0.5) == doctest::Approx(1.0));
    CHECK(s.integral(2.0) == doctest::Approx(2.0 + 0.5));
    CHECK(s.integral(5.0) == doctest::Approx(2.0 + 1.0 + 2.0));
    CHECK(s.value(1.0) == 0.5);  // right-continuous at the break
}

TEST_CASE("default horizon is eight mean disorder times") {
    auto m = validate(reference_n1());
    CHECK(default_horizon(m, 1e-3) == doctest::Approx(80.0));
}
