#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dqr/fragment.hpp"

namespace dqr {

// Metadata needed to fold fragment expectation values back into one
// observable: which fragments form each product term and with what signed
// weight, plus the global factor contributed by the cut decomposition.
struct ReconstructionMeta {
    long n_terms = 0;
    int n_components = 0;
    double global_factor = 1.0;
    std::vector<std::vector<int>> term_fragments;  // term -> fragment ids, one per component
    std::vector<double> term_coefficients;         // term -> signed weight

    void validate() const;  // throws ConfigError
};

// Synthetic circuit-cut workload description. Defaults model one hardware-
// efficient ansatz layer split in half: each cut multiplies the term count by
// the six-element quasi-probability decomposition of the severed two-qubit
// gate, and each term evaluates `components` fragments.
struct WorkloadSpec {
    int n_qubits = 32;
    int n_layers = 1;
    int cuts = 2;
    int components = 2;
    std::uint64_t seed = 0;

    // Per-component structural metrics; when unset they derive from the parent
    // circuit (half the qubits and gates, full depth).
    std::optional<long> qubits;
    std::optional<long> depth;
    std::optional<long> two_qubit_gates;
    std::optional<long> total_ops;

    // Signed per-cut weights. The global 1/2-per-cut factor is carried by
    // ReconstructionMeta::global_factor, so these are unit magnitude.
    std::array<double, 6> cut_weights{+1, +1, +1, +1, -1, -1};
    bool uniform_unit_coefficients = false;  // force every term coefficient to +1

    // Relative jitter applied to the structural metrics per fragment (seeded);
    // zero keeps every fragment identical.
    double metric_jitter = 0.0;

    void validate() const;  // throws SpecError
};

struct Workload {
    std::vector<FragmentDescriptor> fragments;  // components * 6^cuts descriptors
    ReconstructionMeta meta;
};

// Deterministic: the same spec (seed included) produces byte-identical output.
Workload generate(const WorkloadSpec& spec);

// Weighted sum of per-term products over component expectation values, with
// compensated (Neumaier) summation so the result is stable against term
// permutations. Throws MissingResultError on any absent fragment id.
double reconstruct(const ReconstructionMeta& meta,
                   const std::map<int, double>& expected_values);

}  // namespace dqr
