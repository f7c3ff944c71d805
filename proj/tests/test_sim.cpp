#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qdd/sim.hpp"

using namespace qdd;

namespace {

ModelSpec make_model(double pi_tilde, double rate,
                     std::vector<double> b = {1.0},
                     std::vector<double> p = {1.0}) {
    ModelSpec m;
    m.prior0 = {b, p};
    m.prior1 = {b, p};
    m.disorder.pi_tilde = pi_tilde;
    m.disorder.tail = ExponentialTail{rate};
    m.sigma = Schedule::constant(1.0);
    m.cost = Schedule::constant(1.0);
    return validate(m);
}

}  // namespace

TEST_CASE("atom at zero forces theta zero and the increment identity") {
    auto m = make_model(1.0, 0.1, {2.0}, {1.0});
    const auto grid = TimeGrid::make(0.25, 2.0);
    const auto path = simulate_scenario(m, grid, 11, 3);
    CHECK(path.theta == 0.0);
    CHECK(path.magnitude == 2.0);
    for (std::int64_t k = 0; k < grid.steps; ++k)
        CHECK(path.dY[static_cast<std::size_t>(k)] ==
              doctest::Approx(2.0 * grid.dt +
                              path.dW[static_cast<std::size_t>(k)])
                  .epsilon(1e-15));
}

TEST_CASE("same seed and index reproduce the path bitwise") {
    auto m = make_model(0.2, 0.5);
    const auto grid = TimeGrid::make(0.01, 1.0);
    const auto a = simulate_scenario(m, grid, 42, 7);
    const auto b = simulate_scenario(m, grid, 42, 7);
    CHECK(a.theta == b.theta);
    CHECK(a.magnitude == b.magnitude);
    CHECK(a.dW == b.dW);
    CHECK(a.dY == b.dY);
    const auto c = simulate_scenario(m, grid, 42, 8);
    CHECK(a.dW != c.dW);
}

TEST_CASE("left-point convention with fractional overlap at theta") {
    auto m = make_model(0.0, 0.5, {3.0}, {1.0});
    const auto grid = TimeGrid::make(0.5, 4.0);
    for (std::uint64_t p = 0; p < 50; ++p) {
        const auto path = simulate_scenario(m, grid, 5, p);
        for (std::int64_t k = 0; k < grid.steps; ++k) {
            const double overlap =
                std::clamp(grid.time(k + 1) - path.theta, 0.0, grid.dt);
            CHECK(path.dY[static_cast<std::size_t>(k)] ==
                  doctest::Approx(path.magnitude * overlap +
                                  path.dW[static_cast<std::size_t>(k)])
                      .epsilon(1e-14));
        }
    }
}

TEST_CASE("theta law matches the disorder cdf") {
    auto m = make_model(0.2, 0.1);
    const auto grid = TimeGrid::make(1.0, 1.0);  // increments unused here
    const int n = 100000;
    int zeros = 0;
    double tail_sum = 0.0;
    std::vector<double> thetas;
    thetas.reserve(n);
    for (int p = 0; p < n; ++p) {
        const auto path =
            simulate_scenario(m, grid, 2718, static_cast<std::uint64_t>(p));
        thetas.push_back(path.theta);
        if (path.theta == 0.0)
            ++zeros;
        else
            tail_sum += path.theta;
    }
    const double zero_frac = static_cast<double>(zeros) / n;
    CHECK(std::fabs(zero_frac - 0.2) < 0.004);
    CHECK(std::fabs(tail_sum / (n - zeros) - 10.0) < 0.15);

    // Kolmogorov-Smirnov against the mixed cdf at 99%; ties at the atom are
    // grouped, with the left limit F(0-) = 0 used before the jump.
    std::sort(thetas.begin(), thetas.end());
    double ks = 0.0;
    std::size_t i = 0;
    while (i < thetas.size()) {
        std::size_t j = i;
        while (j < thetas.size() && thetas[j] == thetas[i]) ++j;
        const double x = thetas[i];
        const double f_right = m.disorder.cdf(x);
        const double f_left = x == 0.0 ? 0.0 : f_right;
        ks = std::max(ks, std::fabs(static_cast<double>(i) / n - f_left));
        ks = std::max(ks, std::fabs(static_cast<double>(j) / n - f_right));
        i = j;
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("magnitude prior selection depends on the disorder branch") {
    auto m = make_model(0.5, 1.0, {1.0, -2.0}, {0.5, 0.5});
    m.prior0.p = {1.0, 0.0};  // pre-observation disorder always uses b=1
    m.prior1.p = {0.0, 1.0};  // in-observation disorder always uses b=-2
    const auto grid = TimeGrid::make(0.5, 1.0);
    for (std::uint64_t p = 0; p < 200; ++p) {
        const auto path = simulate_scenario(m, grid, 31, p);
        if (path.theta == 0.0)
            CHECK(path.magnitude == 1.0);
        else
            CHECK(path.magnitude == -2.0);
    }
}

TEST_CASE("coupled scenarios: ordering, identity at equal rates, mean gap") {
    auto m = make_model(0.0, 0.2, {0.5, 2.0}, {0.5, 0.5});
    const auto grid = TimeGrid::make(0.5, 2.0);

    double gap = 0.0;
    const int n = 100000;
    for (int p = 0; p < n; ++p) {
        const auto [primary, mismatched] = coupled_scenarios(
            m, 0.5, 0.1, grid, 7, static_cast<std::uint64_t>(p));
        CHECK(mismatched.theta >= primary.theta);
        CHECK(mismatched.magnitude == 0.5);
        CHECK(primary.dW == mismatched.dW);
        // l = min supp and positive atoms: observation increments dominated.
        for (std::size_t k = 0; k < primary.dY.size(); ++k)
            CHECK(mismatched.dY[k] <= primary.dY[k] + 1e-15);
        gap += mismatched.theta - primary.theta;
    }
    CHECK(std::fabs(gap / n - 5.0) < 0.2);  // (lambda - lambda_l)/(lambda lambda_l)

    const auto [a, b] = coupled_scenarios(m, 0.5, 0.2, grid, 7, 3);
    CHECK(a.theta == b.theta);

    CHECK_THROWS_AS(coupled_scenarios(m, 0.5, 0.3, grid, 7, 0),
                    RateOrderError);
}

TEST_CASE("theta=0 coupling with matching drift gives identical observations") {
    auto m = make_model(1.0, 0.2, {0.5}, {1.0});
    const auto grid = TimeGrid::make(0.25, 1.0);
    const auto [a, b] = coupled_scenarios(m, 0.5, 0.2, grid, 13, 5);
    CHECK(a.theta == 0.0);
    CHECK(b.theta == 0.0);
    CHECK(a.dY == b.dY);
}

TEST_CASE("coarsen merges adjacent increments") {
    auto m = make_model(0.2, 0.5);
    const auto grid = TimeGrid::make(0.125, 2.0);
    const auto fine = simulate_scenario(m, grid, 3, 1);
    const auto half = coarsen(fine);
    CHECK(half.grid.steps == grid.steps / 2);
    CHECK(half.dY[0] == doctest::Approx(fine.dY[0] + fine.dY[1]).epsilon(1e-15));
    CHECK(half.theta == fine.theta);
}

TEST_CASE("path csv dump shape") {
    auto m = make_model(1.0, 0.5, {1.0}, {1.0});
    const auto grid = TimeGrid::make(0.5, 1.0);
    const auto path = simulate_scenario(m, grid, 1, 0);
    std::ostringstream os;
    write_path_csv(path, os);
    const auto text = os.str();
    CHECK(text.rfind("t,dW,dY,X\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == grid.steps + 1);
}
