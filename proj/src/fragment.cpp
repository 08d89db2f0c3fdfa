#include "dqr/fragment.hpp"

#include <functional>

namespace dqr {

std::string to_string(BackendClass c) {
    return c == BackendClass::HPC ? "HPC" : "QC";
}

BackendClass backend_class_from_string(const std::string& s) {
    if (s == "HPC") return BackendClass::HPC;
    if (s == "QC") return BackendClass::QC;
    throw ConfigError("unknown backend class: " + s);
}

std::string to_string(PlacementLabel l) {
    switch (l) {
        case PlacementLabel::QC: return "QC";
        case PlacementLabel::HPC: return "HPC";
        case PlacementLabel::Undecided: return "Undecided";
    }
    throw Error("unreachable placement label");
}

PlacementLabel placement_label_from_string(const std::string& s) {
    if (s == "QC") return PlacementLabel::QC;
    if (s == "HPC") return PlacementLabel::HPC;
    if (s == "Undecided") return PlacementLabel::Undecided;
    throw ConfigError("unknown placement label: " + s);
}

std::string to_string(Phase p) {
    switch (p) {
        case Phase::Pending: return "PENDING";
        case Phase::Dispatched: return "DISPATCHED";
        case Phase::Success: return "SUCCESS";
        case Phase::PermanentFailed: return "PERMANENT_FAILED";
    }
    throw Error("unreachable phase");
}

std::string to_string(LifecycleEvent e) {
    switch (e) {
        case LifecycleEvent::Dispatch: return "dispatch";
        case LifecycleEvent::Done: return "done";
        case LifecycleEvent::TransientFail: return "transient_fail";
        case LifecycleEvent::PermanentFail: return "permanent_fail";
    }
    throw Error("unreachable lifecycle event");
}

void FragmentDescriptor::validate() const {
    if (id < 0) throw ConfigError("fragment id must be non-negative");
    if (qubits < 1) throw ConfigError("fragment qubits must be >= 1");
    if (depth < 1) throw ConfigError("fragment depth must be >= 1");
    if (two_qubit_gates < 0) throw ConfigError("fragment two_qubit_gates must be >= 0");
    if (total_ops < two_qubit_gates)
        throw ConfigError("fragment total_ops must be >= two_qubit_gates");
    if (admissible_backends.empty())
        throw ConfigError("fragment must admit at least one backend class");
    if (component_id < 0) throw ConfigError("fragment component_id must be >= 0");
}

FragmentMetrics FragmentDescriptor::metrics() const {
    return FragmentMetrics{
        static_cast<double>(qubits),
        static_cast<double>(depth),
        static_cast<double>(two_qubit_gates),
        static_cast<double>(total_ops),
    };
}

std::size_t FragmentDescriptor::structural_hash() const {
    std::size_t h = std::hash<int>{}(id);
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b9 + (h << 6) + (h >> 2); };
    mix(std::hash<std::string>{}(payload_ref));
    mix(std::hash<long>{}(qubits));
    mix(std::hash<long>{}(depth));
    mix(std::hash<long>{}(two_qubit_gates));
    mix(std::hash<long>{}(total_ops));
    mix(std::hash<double>{}(coefficient));
    mix(std::hash<int>{}(component_id));
    for (BackendClass c : admissible_backends) mix(std::hash<int>{}(static_cast<int>(c)));
    return h;
}

FragmentState transition(FragmentState state, LifecycleEvent event) {
    const auto reject = [&]() -> FragmentState {
        throw IllegalTransition("event '" + to_string(event) + "' not allowed in phase '" +
                                to_string(state.phase) + "'");
    };
    switch (state.phase) {
        case Phase::Pending:
            if (event == LifecycleEvent::Dispatch) {
                state.phase = Phase::Dispatched;
                return state;
            }
            return reject();
        case Phase::Dispatched:
            switch (event) {
                case LifecycleEvent::Done:
                    state.phase = Phase::Success;
                    return state;
                case LifecycleEvent::TransientFail:
                    state.phase = Phase::Pending;
                    state.transient_failure_count += 1;
                    return state;
                case LifecycleEvent::PermanentFail:
                    state.phase = Phase::PermanentFailed;
                    return state;
                default:
                    return reject();
            }
        case Phase::Success:
        case Phase::PermanentFailed:
            return reject();  // terminal phases absorb everything
    }
    return reject();
}

void FragmentResult::validate() const {
    if (fragment_id < 0) throw ConfigError("result fragment_id must be >= 0");
    if (expected_value < -1.0 || expected_value > 1.0)
        throw ConfigError("expected_value outside [-1, 1]");
    if (shots <= 0) throw ConfigError("shots must be positive");
    if (backend_identity.empty()) throw ConfigError("result missing backend identity");
}

}  // namespace dqr
