#include "dqr/labeler.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dqr {
namespace {

struct MetricView {
    std::optional<double> value;
    double qc_max;
    double hpc_min;
    double weight;
};

std::array<MetricView, 4> views(const FragmentMetrics& m, const BudgetThresholds& t,
                                const ScoreWeights& w) {
    return {{
        {m.qubits, t.qc_max.qubits, t.hpc_min.qubits, w.qubits},
        {m.depth, t.qc_max.depth, t.hpc_min.depth, w.depth},
        {m.two_qubit_gates, t.qc_max.two_qubit_gates, t.hpc_min.two_qubit_gates,
         w.two_qubit_gates},
        {m.total_ops, t.qc_max.total_ops, t.hpc_min.total_ops, w.total_ops},
    }};
}

}  // namespace

void BudgetThresholds::validate() const {
    for (double b : {qc_max.qubits, qc_max.depth, qc_max.two_qubit_gates, qc_max.total_ops})
        if (b <= 0) throw ConfigError("budget qc_max components must be positive");
    for (double b : {hpc_min.qubits, hpc_min.depth, hpc_min.two_qubit_gates, hpc_min.total_ops})
        if (b < 0) throw ConfigError("budget hpc_min components must be non-negative");
    if (quorum < 1 || quorum > 4)
        throw ConfigError("budget quorum must be between 1 and 4");
}

void ScoreWeights::validate() const {
    for (double v : {qubits, depth, two_qubit_gates, total_ops})
        if (v < 0) throw ConfigError("score weights must be non-negative");
    const double sum = qubits + depth + two_qubit_gates + total_ops;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("score weights must sum to 1");
    if (delta < 0) throw ConfigError("score delta must be non-negative");
    if (tau_qc - delta > tau_hpc + delta)
        throw ConfigError("score thresholds overlap: tau_qc - delta > tau_hpc + delta");
}

AutobudgetFractions AutobudgetFractions::normalized() const {
    if (qc < 0 || hpc < 0 || undecided < 0)
        throw ConfigError("autobudget fractions must be non-negative");
    const double sum = qc + hpc + undecided;
    if (sum <= 0) throw ConfigError("autobudget fractions must not all be zero");
    return {qc / sum, hpc / sum, undecided / sum};
}

PlacementLabel label_budget(const FragmentMetrics& m, const BudgetThresholds& t) {
    t.validate();
    const auto vs = views(m, t, ScoreWeights{});
    // Envelope check over available metrics only; a fragment with no metrics
    // at all fits vacuously and stays on the QC path.
    bool inside = true;
    int votes = 0;
    for (const auto& v : vs) {
        if (!v.value) continue;
        if (*v.value > v.qc_max) inside = false;
        if (*v.value >= v.hpc_min) ++votes;
    }
    if (inside) return PlacementLabel::QC;
    if (votes >= t.quorum) return PlacementLabel::HPC;
    return PlacementLabel::Undecided;
}

std::optional<double> score(const FragmentMetrics& m, const ScoreWeights& w,
                            const MetricBounds& qc_max) {
    w.validate();
    BudgetThresholds env;
    env.qc_max = qc_max;
    env.validate();
    const auto vs = views(m, env, w);
    double acc = 0.0;
    double weight_sum = 0.0;
    for (const auto& v : vs) {
        if (!v.value) continue;
        acc += v.weight * (*v.value / v.qc_max);
        weight_sum += v.weight;
    }
    if (weight_sum <= 0) return std::nullopt;
    // Renormalize so missing metrics do not silently drag the score toward QC.
    return acc / weight_sum;
}

double score(const FragmentDescriptor& f, const ScoreWeights& w, const MetricBounds& qc_max) {
    const auto s = score(f.metrics(), w, qc_max);
    if (!s) throw ConfigError("score undefined: no metrics available");
    return *s;
}

PlacementLabel label_score(const FragmentMetrics& m, const ScoreWeights& w,
                           const MetricBounds& qc_max) {
    const auto s = score(m, w, qc_max);
    if (!s) return PlacementLabel::Undecided;
    if (*s <= w.tau_qc - w.delta) return PlacementLabel::QC;
    if (*s >= w.tau_hpc + w.delta) return PlacementLabel::HPC;
    return PlacementLabel::Undecided;
}

PlacementLabel label_hybrid(const FragmentMetrics& m, const BudgetThresholds& t,
                            const ScoreWeights& w) {
    const PlacementLabel b = label_budget(m, t);
    if (b != PlacementLabel::Undecided) return b;
    return label_score(m, w, t.qc_max);
}

AutobudgetTargets autobudget_targets(const AutobudgetFractions& a, std::size_t n) {
    const AutobudgetFractions f = a.normalized();
    const double dn = static_cast<double>(n);
    // Round-half-up, then clamp so the triple always sums to n with every
    // entry non-negative (the raw formula can overshoot for shares near 1/2).
    long qc = static_cast<long>(std::floor(f.qc * dn + 0.5));
    qc = std::clamp<long>(qc, 0, static_cast<long>(n));
    long hpc = static_cast<long>(std::floor(f.hpc * dn + 0.5));
    hpc = std::clamp<long>(hpc, 0, static_cast<long>(n) - qc);
    return {qc, hpc, static_cast<long>(n) - qc - hpc};
}

AutobudgetOutcome label_autobudget(const std::vector<FragmentDescriptor>& fragments,
                                   const AutobudgetFractions& fractions,
                                   const BudgetThresholds& t, const ScoreWeights& w) {
    t.validate();
    w.validate();
    AutobudgetOutcome out;
    out.targets = autobudget_targets(fractions, fragments.size());
    out.labels.assign(fragments.size(), PlacementLabel::Undecided);

    struct Ranked {
        std::size_t index;
        int id;
        double s;
    };
    std::vector<Ranked> eligible;
    std::vector<Ranked> rest;
    eligible.reserve(fragments.size());
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        const auto& f = fragments[i];
        const double s = score(f, w, t.qc_max);
        if (label_budget(f.metrics(), t) == PlacementLabel::QC)
            eligible.push_back({i, f.id, s});
        else
            rest.push_back({i, f.id, s});
    }

    std::sort(eligible.begin(), eligible.end(), [](const Ranked& a, const Ranked& b) {
        if (a.s != b.s) return a.s < b.s;  // strongest QC affinity first
        return a.id < b.id;
    });
    const std::size_t take_qc =
        std::min<std::size_t>(eligible.size(), static_cast<std::size_t>(out.targets.qc));
    for (std::size_t i = 0; i < take_qc; ++i)
        out.labels[eligible[i].index] = PlacementLabel::QC;
    out.qc_shortfall = out.targets.qc - static_cast<long>(take_qc);

    // Whatever the QC quota did not absorb competes for the HPC quota.
    for (std::size_t i = take_qc; i < eligible.size(); ++i) rest.push_back(eligible[i]);
    std::sort(rest.begin(), rest.end(), [](const Ranked& a, const Ranked& b) {
        if (a.s != b.s) return a.s > b.s;  // strongest HPC affinity first
        return a.id < b.id;
    });
    const std::size_t take_hpc =
        std::min<std::size_t>(rest.size(), static_cast<std::size_t>(out.targets.hpc));
    for (std::size_t i = 0; i < take_hpc; ++i)
        out.labels[rest[i].index] = PlacementLabel::HPC;

    return out;
}

}  // namespace dqr
