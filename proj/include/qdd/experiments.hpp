#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdd/model.hpp"

#include "json.hpp"

namespace qdd {

// Config for one named suite. Fields beyond the common block are used by the
// suites that need them; the JSON parser rejects unknown keys.
struct ExperimentConfig {
    std::string name;
    std::optional<ModelSpec> model;
    std::optional<ModelSpec> model_n1;  // concavity: the one-atom companion
    std::uint64_t seed = 1;
    std::int64_t paths = 200000;
    double dt = 1e-3;
    double horizon = 0.0;  // 0: eight mean disorder times
    int threads = 0;
    std::vector<double> sweep;
    double bracket_lo = 0.02, bracket_hi = 0.98;
    bool refine = false;
    std::vector<double> pi_values{0.0, 0.3};
    std::vector<DisorderLaw> lambda_variants;          // intensity_comparison
    std::optional<std::pair<DisorderLaw, DisorderLaw>> dominated_pair;
    double lambda_l = 0.0, lambda_r = 0.0;             // robustness_sandwich
    double h = 1.0 / 400, h1 = 1.0 / 1000;             // dp grids
    double dp_dt = 1e-3;
    int segments = 200;
    std::vector<double> dts{1e-2, 5e-3, 2.5e-3};       // filter_consistency
    std::vector<double> times{0.0, 1.0, 5.0, 10.0, 20.0};
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// pass: 1 = inequality holds, 0 = violated, -1 = informational row.
struct ReportRow {
    std::string label;
    double statistic = 0.0;
    double ci = 0.0;
    std::string inequality;
    std::string claim_id;
    double slack = 0.0;
    int pass = -1;
};

struct ExperimentReport {
    std::string name;
    std::uint64_t seed = 0;
    double dt = 0.0;
    double horizon = 0.0;
    std::int64_t paths = 0;
    std::vector<ReportRow> rows;
    std::string timestamp;     // excluded from the CSV form
    double runtime_sec = 0.0;  // likewise

    bool all_pass() const {
        for (const auto& r : rows)
            if (r.pass == 0) return false;
        return true;
    }
};

ExperimentReport run_experiment(const ExperimentConfig& config);

// CSV form carries only reproducible fields; JSON adds a timing block.
std::string report_to_csv(const ExperimentReport& report);
nlohmann::json report_to_json(const ExperimentReport& report);

}  // namespace qdd
