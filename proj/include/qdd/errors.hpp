#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qdd {

// Model validation failure. Collects every violated invariant so callers
// see the full list at once instead of fixing one field at a time.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string msg = "model validation failed:";
        for (const auto& s : issues) {
            msg += "\n  - ";
            msg += s;
        }
        return msg;
    }
    std::vector<std::string> issues_;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coupled-scenario rate ordering violated (mismatch rate above true rate).
struct RateOrderError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Free-boundary root not bracketed; signals tolerance misconfiguration.
struct NoBracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Threshold scan cannot distinguish candidates at the given MC budget.
struct FlatObjectiveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyBoundaryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownExperimentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace qdd
