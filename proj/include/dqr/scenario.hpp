#pragma once

#include <filesystem>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "dqr/backend.hpp"
#include "dqr/coordinator.hpp"
#include "dqr/labeler.hpp"
#include "dqr/metrics.hpp"
#include "dqr/workload.hpp"

namespace dqr {

enum class LabelMode { Budget, Score, Hybrid, Autobudget };

std::string to_string(LabelMode m);
LabelMode label_mode_from_string(const std::string& s);

struct LabelingConfig {
    LabelMode mode = LabelMode::Autobudget;
    AutobudgetFractions fractions{0.1, 0.8, 0.1};
    BudgetThresholds budget;
    ScoreWeights weights;

    // Labels the batch under the configured mode. `qc_shortfall` (may be null)
    // reports how far the quota policy fell short of its QC target.
    std::vector<PlacementLabel> apply(const std::vector<FragmentDescriptor>& fragments,
                                      long* qc_shortfall = nullptr) const;
};

// Named backend starting points; scenarios override individual fields.
BackendModel backend_preset(const std::string& name);

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    WorkloadSpec workload;
    std::optional<std::filesystem::path> workload_file;  // wins over the generator
    LabelingConfig labeling;
    RoutingPolicy policy;
    RuntimeEnvironment env;
    std::optional<BackendModel> hpc;
    std::optional<BackendModel> qc;
    // When present, fragment ids resolve to these expectation values instead
    // of seeded synthetic draws.
    std::map<int, double> pinned_expected_values;
    double t_setup_s = 0.0;
    double makespan_cpu_s = 0.0;

    void validate() const;  // throws ConfigError
};

Scenario scenario_from_json(const nlohmann::json& j,
                            const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

struct ScenarioRun {
    Workload workload;
    std::vector<PlacementLabel> initial_labels;
    long qc_label_shortfall = 0;
    RunOutcome outcome;
    std::optional<RunMetrics> metrics;    // absent when the run deadlocked
    std::optional<double> reconstructed;  // absent unless every fragment succeeded
};

// Generates (or loads) the workload, labels it, wires up backends and
// coordinator, and drives the run to completion. Process-environment capacity
// and policy overrides apply only when env.source == ProcessEnv.
ScenarioRun run_scenario(const Scenario& scenario);

}  // namespace dqr
