#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "dqr/errors.hpp"

namespace dqr {

enum class BackendClass { HPC, QC };

std::string to_string(BackendClass c);
BackendClass backend_class_from_string(const std::string& s);

// Routing hint attached to a fragment. Hints are not binding: Undecided
// fragments are resolved at dispatch time and failover may rewrite QC to HPC.
enum class PlacementLabel { QC, HPC, Undecided };

std::string to_string(PlacementLabel l);
PlacementLabel placement_label_from_string(const std::string& s);

// Structural metrics as seen by the labeling policies. Kept separate from the
// descriptor so policies stay well-defined when a metric is unavailable
// (absent metrics cast no budget vote and are dropped from the score with
// weight renormalization).
struct FragmentMetrics {
    std::optional<double> qubits;
    std::optional<double> depth;
    std::optional<double> two_qubit_gates;
    std::optional<double> total_ops;
};

// Immutable description of one subcircuit evaluation. Only the label and the
// lifecycle state of a fragment ever change after generation; everything here
// stays fixed, which is what makes results cacheable by id.
struct FragmentDescriptor {
    int id = 0;
    std::string payload_ref;       // opaque handle to the subcircuit payload
    long qubits = 1;
    long depth = 1;
    long two_qubit_gates = 0;
    long total_ops = 0;            // all ops, two-qubit gates included
    double coefficient = 1.0;      // signed quasi-probability weight of its term
    std::set<BackendClass> admissible_backends{BackendClass::HPC, BackendClass::QC};
    int component_id = 0;          // position of this fragment inside its term

    void validate() const;         // throws ConfigError on violated invariants
    FragmentMetrics metrics() const;
    bool admits(BackendClass c) const { return admissible_backends.count(c) != 0; }

    // Hash over the structural fields; used to assert immutability across
    // lifecycle transitions.
    std::size_t structural_hash() const;
};

enum class Phase { Pending, Dispatched, Success, PermanentFailed };
enum class LifecycleEvent { Dispatch, Done, TransientFail, PermanentFail };

std::string to_string(Phase p);
std::string to_string(LifecycleEvent e);

inline bool is_terminal(Phase p) {
    return p == Phase::Success || p == Phase::PermanentFailed;
}

struct FragmentState {
    Phase phase = Phase::Pending;
    // Total transient failures over the fragment's lifetime; never decreases.
    int transient_failure_count = 0;
};

// Pure transition function. Terminal phases absorb every event by throwing
// IllegalTransition; the caller decides when an exhausted retry budget turns
// a transient failure into PermanentFail.
FragmentState transition(FragmentState state, LifecycleEvent event);

// One executed measurement, deposited into the result store by the backend.
struct FragmentResult {
    int fragment_id = 0;
    double expected_value = 0.0;   // in [-1, 1]
    int shots = 1024;
    std::string pauli_string;      // one char per measured qubit
    std::string backend_identity;
    std::map<std::string, double> phase_timings;  // seconds per named phase

    void validate() const;         // throws ConfigError
};

}  // namespace dqr
