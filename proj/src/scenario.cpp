#include "dqr/scenario.hpp"

#include <fstream>

#include "dqr/errors.hpp"
#include "dqr/json_io.hpp"

namespace dqr {

std::string to_string(LabelMode m) {
    switch (m) {
        case LabelMode::Budget: return "budget";
        case LabelMode::Score: return "score";
        case LabelMode::Hybrid: return "hybrid";
        case LabelMode::Autobudget: return "autobudget";
    }
    return "autobudget";
}

LabelMode label_mode_from_string(const std::string& s) {
    if (s == "budget") return LabelMode::Budget;
    if (s == "score") return LabelMode::Score;
    if (s == "hybrid") return LabelMode::Hybrid;
    if (s == "autobudget") return LabelMode::Autobudget;
    throw ConfigError("unknown labeling mode '" + s + "'");
}

std::vector<PlacementLabel> LabelingConfig::apply(const std::vector<FragmentDescriptor>& fragments,
                                                  long* qc_shortfall) const {
    if (qc_shortfall) *qc_shortfall = 0;
    if (mode == LabelMode::Autobudget) {
        AutobudgetOutcome out = label_autobudget(fragments, fractions, budget, weights);
        if (qc_shortfall) *qc_shortfall = out.qc_shortfall;
        return std::move(out.labels);
    }
    std::vector<PlacementLabel> labels;
    labels.reserve(fragments.size());
    for (const FragmentDescriptor& f : fragments) {
        const FragmentMetrics m = f.metrics();
        switch (mode) {
            case LabelMode::Budget: labels.push_back(label_budget(m, budget)); break;
            case LabelMode::Score: labels.push_back(label_score(m, weights, budget.qc_max)); break;
            case LabelMode::Hybrid: labels.push_back(label_hybrid(m, budget, weights)); break;
            case LabelMode::Autobudget: break;  // handled above
        }
    }
    return labels;
}

BackendModel backend_preset(const std::string& name) {
    BackendModel m;
    m.identity = name;
    if (name == "hpc-pool") {
        m.backend_class = BackendClass::HPC;
        m.latency = LatencyModel::constant(3.6);
        return m;
    }
    if (name == "qmio-local") {
        m.backend_class = BackendClass::QC;
        m.latency = LatencyModel::constant(4.5);
        return m;
    }
    if (name == "cloud-remote") {
        m.backend_class = BackendClass::QC;
        m.latency = LatencyModel::truncated_normal(18.5, 3.0, 12.6, 28.0);
        return m;
    }
    throw ConfigError("unknown backend preset '" + name + "'");
}

namespace {

MetricBounds bounds_from_json(const nlohmann::json& j) {
    MetricBounds b;
    b.qubits = j.value("qubits", 0.0);
    b.depth = j.value("depth", 0.0);
    b.two_qubit_gates = j.value("two_qubit_gates", 0.0);
    b.total_ops = j.value("total_ops", 0.0);
    return b;
}

LatencyModel latency_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return LatencyModel::constant(j.at("mean").get<double>());
    if (kind == "truncated_normal") {
        return LatencyModel::truncated_normal(j.at("mean").get<double>(),
                                              j.at("stddev").get<double>(),
                                              j.at("min").get<double>(), j.at("max").get<double>());
    }
    if (kind == "empirical") {
        return LatencyModel::empirical(j.at("values").get<std::vector<double>>());
    }
    throw ConfigError("unknown latency kind '" + kind + "'");
}

BackendModel backend_from_json(const nlohmann::json& j, BackendClass expected) {
    BackendModel m;
    if (j.contains("preset")) {
        m = backend_preset(j.at("preset").get<std::string>());
    } else {
        m.backend_class = expected;
        m.identity = j.at("identity").get<std::string>();
    }
    if (j.contains("identity")) m.identity = j.at("identity").get<std::string>();
    if (j.contains("latency")) m.latency = latency_from_json(j.at("latency"));
    if (j.contains("slots")) m.slots = j.at("slots").get<int>();
    if (j.contains("degraded")) m.degraded = j.at("degraded").get<bool>();
    if (j.contains("shots")) m.shots = j.at("shots").get<int>();
    if (j.contains("failures")) {
        const auto& f = j.at("failures");
        m.failures.transient_rate = f.value("transient_rate", 0.0);
        if (f.contains("permanent_reject_ids")) {
            for (const auto& id : f.at("permanent_reject_ids")) {
                m.failures.permanent_reject_ids.insert(id.get<int>());
            }
        }
        if (f.contains("reject_reason")) {
            m.failures.reject_reason = f.at("reject_reason").get<std::string>();
        }
    }
    if (m.backend_class != expected) {
        throw ConfigError("backend '" + m.identity + "' has class " + to_string(m.backend_class) +
                          ", expected " + to_string(expected));
    }
    m.validate();
    return m;
}

WorkloadSpec workload_from_config(const nlohmann::json& j, std::uint64_t scenario_seed) {
    WorkloadSpec spec;
    spec.seed = scenario_seed;
    spec.n_qubits = j.value("n_qubits", spec.n_qubits);
    spec.n_layers = j.value("n_layers", spec.n_layers);
    spec.cuts = j.value("cuts", spec.cuts);
    spec.components = j.value("components", spec.components);
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("qubits")) spec.qubits = j.at("qubits").get<long>();
    if (j.contains("depth")) spec.depth = j.at("depth").get<long>();
    if (j.contains("two_qubit_gates")) spec.two_qubit_gates = j.at("two_qubit_gates").get<long>();
    if (j.contains("total_ops")) spec.total_ops = j.at("total_ops").get<long>();
    if (j.contains("cut_weights")) {
        const auto weights = j.at("cut_weights").get<std::vector<double>>();
        if (weights.size() != spec.cut_weights.size()) {
            throw ConfigError("cut_weights needs exactly 6 entries");
        }
        std::copy(weights.begin(), weights.end(), spec.cut_weights.begin());
    }
    spec.uniform_unit_coefficients = j.value("uniform_unit_coefficients", false);
    spec.metric_jitter = j.value("metric_jitter", 0.0);
    spec.validate();
    return spec;
}

}  // namespace

void Scenario::validate() const {
    workload.validate();
    policy.validate();
    env.validate();
    if (hpc) hpc->validate();
    if (qc) qc->validate();
    if (t_setup_s < 0.0) throw ConfigError("t_setup_s must be >= 0");
    if (makespan_cpu_s < 0.0) throw ConfigError("makespan_cpu_s must be >= 0");
    for (const auto& [id, value] : pinned_expected_values) {
        if (value < -1.0 || value > 1.0) {
            throw ConfigError("pinned expected value for fragment " + std::to_string(id) +
                              " outside [-1, 1]");
        }
    }
}

Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    Scenario s;
    try {
        s.name = j.value("name", std::string{});
        s.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("workload_file")) {
            std::filesystem::path p = j.at("workload_file").get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            s.workload_file = p;
        }
        if (j.contains("workload")) {
            s.workload = workload_from_config(j.at("workload"), s.seed);
        } else {
            s.workload.seed = s.seed;
        }

        if (j.contains("labeling")) {
            const auto& l = j.at("labeling");
            s.labeling.mode = label_mode_from_string(l.value("mode", std::string{"autobudget"}));
            if (l.contains("fractions")) {
                const auto& f = l.at("fractions");
                s.labeling.fractions.qc = f.value("qc", 0.0);
                s.labeling.fractions.hpc = f.value("hpc", 0.0);
                s.labeling.fractions.undecided = f.value("undecided", 0.0);
            }
            if (l.contains("budget")) {
                const auto& b = l.at("budget");
                if (b.contains("qc_max")) s.labeling.budget.qc_max = bounds_from_json(b.at("qc_max"));
                if (b.contains("hpc_min")) {
                    s.labeling.budget.hpc_min = bounds_from_json(b.at("hpc_min"));
                }
                s.labeling.budget.quorum = b.value("quorum", 1);
            }
            if (l.contains("score")) {
                const auto& w = l.at("score");
                if (w.contains("weights")) {
                    const auto& ws = w.at("weights");
                    s.labeling.weights.qubits = ws.value("qubits", 0.25);
                    s.labeling.weights.depth = ws.value("depth", 0.25);
                    s.labeling.weights.two_qubit_gates = ws.value("two_qubit_gates", 0.25);
                    s.labeling.weights.total_ops = ws.value("total_ops", 0.25);
                }
                s.labeling.weights.tau_qc = w.value("tau_qc", 0.4);
                s.labeling.weights.tau_hpc = w.value("tau_hpc", 0.6);
                s.labeling.weights.delta = w.value("delta", 0.0);
            }
        }

        if (j.contains("runtime")) {
            const auto& r = j.at("runtime");
            s.env.mpi_ranks = r.value("mpi_ranks", 2);
            s.env.qc_slots_total = r.value("qc_slots_total", 0);
            s.env.qc_degraded = r.value("qc_degraded", false);
            const std::string source = r.value("capacity_source", std::string{"scenario"});
            if (source == "scenario") {
                s.env.source = RuntimeEnvironment::Source::Scenario;
            } else if (source == "process-env") {
                s.env.source = RuntimeEnvironment::Source::ProcessEnv;
            } else {
                throw ConfigError("unknown capacity_source '" + source + "'");
            }
            s.policy.max_transient_retries = r.value("max_transient_retries", 1);
            s.policy.allow_failover_qc_to_hpc = r.value("allow_failover_qc_to_hpc", true);
            s.policy.prefer_iter0_undecided = undecided_preference_from_string(
                r.value("prefer_iter0_undecided", std::string{"HPC"}));
            s.policy.prefer_itern_undecided = undecided_preference_from_string(
                r.value("prefer_itern_undecided", std::string{"HPC"}));
        }

        if (j.contains("backends")) {
            const auto& b = j.at("backends");
            if (b.contains("hpc")) s.hpc = backend_from_json(b.at("hpc"), BackendClass::HPC);
            if (b.contains("qc")) s.qc = backend_from_json(b.at("qc"), BackendClass::QC);
        }

        if (j.contains("expected_values")) {
            for (const auto& [key, value] : j.at("expected_values").items()) {
                s.pinned_expected_values[std::stoi(key)] = value.get<double>();
            }
        }
        if (j.contains("constants")) {
            const auto& c = j.at("constants");
            s.t_setup_s = c.value("t_setup_s", 0.0);
            s.makespan_cpu_s = c.value("makespan_cpu_s", 0.0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scenario: ") + e.what());
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    Scenario s = scenario_from_json(j, path.parent_path());
    if (s.name.empty()) s.name = path.stem().string();
    return s;
}

ScenarioRun run_scenario(const Scenario& scenario) {
    scenario.validate();

    ScenarioRun run;
    if (scenario.workload_file) {
        run.workload = load_workload(*scenario.workload_file);
    } else {
        run.workload = generate(scenario.workload);
    }
    run.initial_labels = scenario.labeling.apply(run.workload.fragments, &run.qc_label_shortfall);

    // Policy/capacity overrides from the process environment apply only in
    // process mode; scenario mode stays hermetic.
    RoutingPolicy policy = scenario.policy;
    RuntimeEnvironment env = scenario.env;
    if (env.source == RuntimeEnvironment::Source::ProcessEnv) {
        apply_process_env(policy);
        apply_process_env(env);
    }

    std::optional<SimulatedBackend> hpc;
    std::optional<SimulatedBackend> qc;
    const std::map<int, double>* pinned =
        scenario.pinned_expected_values.empty() ? nullptr : &scenario.pinned_expected_values;
    if (scenario.hpc) hpc.emplace(*scenario.hpc, scenario.seed, pinned);
    if (scenario.qc) qc.emplace(*scenario.qc, scenario.seed, pinned);

    SimEngine engine;
    Coordinator coordinator(run.workload.fragments, run.initial_labels,
                            hpc ? &*hpc : nullptr, qc ? &*qc : nullptr, policy, env, engine);

    const ReconstructionMeta& meta = run.workload.meta;
    const std::size_t n_fragments = run.workload.fragments.size();
    const RunFinalizer finalizer = [&meta, n_fragments](const ResultStore& store) {
        nlohmann::ordered_json extra;
        const std::map<int, double> values = store.expected_values();
        if (values.size() == n_fragments) {
            extra["reconstruction"] = reconstruct(meta, values);
        } else {
            extra["reconstruction"] = nullptr;  // failures left holes
        }
        extra["n_results"] = values.size();
        return extra;
    };

    const nlohmann::ordered_json extra_config{
        {"scenario", scenario.name},
        {"seed", scenario.seed},
        {"t_setup_s", scenario.t_setup_s},
        {"makespan_cpu_s", scenario.makespan_cpu_s},
        {"labeling_mode", to_string(scenario.labeling.mode)},
        {"qc_label_shortfall", run.qc_label_shortfall},
    };

    run.outcome = coordinator.run(extra_config, finalizer);

    if (run.outcome.status == RunStatus::Complete) {
        run.metrics = compute(run.outcome.trace, constants_from_trace(run.outcome.trace));
        std::map<int, double> values;
        for (const auto& [id, result] : run.outcome.results) values[id] = result.expected_value;
        if (values.size() == n_fragments) run.reconstructed = reconstruct(meta, values);
    }
    return run;
}

}  // namespace dqr
