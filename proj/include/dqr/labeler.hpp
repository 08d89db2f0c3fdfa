#pragma once

#include <optional>
#include <vector>

#include "dqr/fragment.hpp"

namespace dqr {

// One bound per structural metric; used both as the QC admission envelope
// (upper bounds) and as the HPC vote thresholds (lower bounds).
struct MetricBounds {
    double qubits = 0;
    double depth = 0;
    double two_qubit_gates = 0;
    double total_ops = 0;
};

struct BudgetThresholds {
    MetricBounds qc_max;    // fragment fits the QC envelope if every metric <= bound
    MetricBounds hpc_min;   // each metric >= bound casts one HPC vote
    int quorum = 1;         // votes required for an HPC label

    void validate() const;  // throws ConfigError
};

struct ScoreWeights {
    double qubits = 0.25;
    double depth = 0.25;
    double two_qubit_gates = 0.25;
    double total_ops = 0.25;
    double tau_qc = 0.4;    // S <= tau_qc - delta  -> QC (boundary inclusive)
    double tau_hpc = 0.6;   // S >= tau_hpc + delta -> HPC (boundary inclusive)
    double delta = 0.0;     // dead band half-width around the thresholds

    void validate() const;  // throws ConfigError
};

// Target shares for the quota policy; normalized so they sum to one.
struct AutobudgetFractions {
    double qc = 0.0;
    double hpc = 0.0;
    double undecided = 0.0;

    AutobudgetFractions normalized() const;  // throws ConfigError if sum <= 0
};

// QC iff every *available* metric lies inside the envelope; otherwise HPC iff
// at least `quorum` metrics clear their vote threshold; otherwise Undecided.
// Lower-is-QC ordering is monotone: growing a metric never moves the label
// toward QC.
PlacementLabel label_budget(const FragmentMetrics& m, const BudgetThresholds& t);

// Normalized pressure score S in [0, ~): 0 means no load, 1 means every metric
// sits exactly at its envelope bound. Deliberately unclamped above 1 so
// oversize fragments keep a meaningful ordering. Metrics without a value are
// dropped and the remaining weights renormalized; returns nullopt when nothing
// is available. Throws ConfigError on zero envelope components.
std::optional<double> score(const FragmentMetrics& m, const ScoreWeights& w,
                            const MetricBounds& qc_max);
double score(const FragmentDescriptor& f, const ScoreWeights& w, const MetricBounds& qc_max);

PlacementLabel label_score(const FragmentMetrics& m, const ScoreWeights& w,
                           const MetricBounds& qc_max);

// Budget first; if it is decisive that label wins, otherwise fall back to the
// score thresholds.
PlacementLabel label_hybrid(const FragmentMetrics& m, const BudgetThresholds& t,
                            const ScoreWeights& w);

struct AutobudgetTargets {
    long qc = 0;
    long hpc = 0;
    long undecided = 0;
};

// floor(share * n + 1/2) per class, clamped so the triple sums to n with no
// negative entry; Undecided takes the remainder.
AutobudgetTargets autobudget_targets(const AutobudgetFractions& a, std::size_t n);

struct AutobudgetOutcome {
    std::vector<PlacementLabel> labels;  // parallel to the input order
    AutobudgetTargets targets;
    // Fragments the QC quota wanted but the envelope refused; they spill into
    // the HPC/Undecided ranking. Non-zero shortfall is a warning, not an error.
    long qc_shortfall = 0;
};

// Quota labeling over a whole batch: envelope-eligible fragments ranked by
// ascending score fill the QC quota, the rest ranked by descending score fill
// the HPC quota, leftovers stay Undecided. Ties break by ascending id.
AutobudgetOutcome label_autobudget(const std::vector<FragmentDescriptor>& fragments,
                                   const AutobudgetFractions& fractions,
                                   const BudgetThresholds& t, const ScoreWeights& w);

}  // namespace dqr
