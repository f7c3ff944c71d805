#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qdd {

// Uniform time discretization of [0, horizon].
struct TimeGrid {
    double dt = 0.0;
    double horizon = 0.0;
    std::int64_t steps = 0;

    static TimeGrid make(double dt, double horizon) {
        if (!(dt > 0.0) || !(horizon > 0.0))
            throw std::invalid_argument("TimeGrid: dt and horizon must be positive");
        const auto steps = static_cast<std::int64_t>(std::llround(horizon / dt));
        if (steps < 1)
            throw std::invalid_argument("TimeGrid: needs at least one step");
        if (std::fabs(static_cast<double>(steps) * dt - horizon) > 1e-9)
            throw std::invalid_argument("TimeGrid: horizon is not a multiple of dt");
        return TimeGrid{dt, horizon, steps};
    }

    double time(std::int64_t k) const { return static_cast<double>(k) * dt; }
};

}  // namespace qdd
