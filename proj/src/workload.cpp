#include "dqr/workload.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "dqr/rng.hpp"

namespace dqr {

void ReconstructionMeta::validate() const {
    if (n_terms < 1) throw ConfigError("reconstruction meta needs at least one term");
    if (n_components < 1) throw ConfigError("reconstruction meta needs at least one component");
    if (static_cast<long>(term_fragments.size()) != n_terms ||
        static_cast<long>(term_coefficients.size()) != n_terms)
        throw ConfigError("reconstruction meta term tables disagree with n_terms");
    std::set<int> seen;
    for (const auto& ids : term_fragments) {
        if (static_cast<int>(ids.size()) != n_components)
            throw ConfigError("reconstruction meta term with wrong component count");
        for (int id : ids)
            if (!seen.insert(id).second)
                throw ConfigError("fragment id appears in more than one term slot");
    }
}

void WorkloadSpec::validate() const {
    if (components < 1) throw SpecError("workload needs at least one component per term");
    if (cuts < 0) throw SpecError("workload cut count must be non-negative");
    if (cuts > 7) throw SpecError("workload cut count above 7 is not supported");
    if (n_qubits < 2) throw SpecError("workload needs at least two qubits");
    if (n_layers < 1) throw SpecError("workload needs at least one layer");
    if (metric_jitter < 0 || metric_jitter >= 1)
        throw SpecError("metric_jitter must lie in [0, 1)");
}

namespace {

long jittered(long base, double jitter, SplitMix64& rng, long floor_value) {
    if (jitter <= 0) return base;
    const double f = 1.0 + rng.uniform(-jitter, jitter);
    const long v = static_cast<long>(std::llround(static_cast<double>(base) * f));
    return std::max(floor_value, v);
}

}  // namespace

Workload generate(const WorkloadSpec& spec) {
    spec.validate();

    long n_terms = 1;
    for (int i = 0; i < spec.cuts; ++i) n_terms *= 6;

    // Hardware-efficient ansatz defaults: a chain of n two-qubit gates plus 2n
    // single-qubit rotations per layer, depth about n + 2 per layer. A cut
    // splits qubits and gates in half but both halves keep the full depth.
    const long parent_gates = static_cast<long>(spec.n_qubits) * spec.n_layers;
    const long parent_depth = static_cast<long>(spec.n_qubits + 2) * spec.n_layers;
    const long q = spec.qubits.value_or(spec.n_qubits / 2);
    const long d = spec.depth.value_or(parent_depth);
    const long g = spec.two_qubit_gates.value_or(parent_gates / 2);
    const long z = spec.total_ops.value_or(3 * parent_gates / 2);

    Workload w;
    w.meta.n_terms = n_terms;
    w.meta.n_components = spec.components;
    w.meta.global_factor = std::ldexp(1.0, -spec.cuts);  // exact 1 / 2^cuts
    w.meta.term_fragments.reserve(n_terms);
    w.meta.term_coefficients.reserve(n_terms);
    w.fragments.reserve(static_cast<std::size_t>(n_terms) * spec.components);

    SplitMix64 jitter_rng(derive_stream_seed(spec.seed, "workload/metric-jitter"));

    int next_id = 0;
    for (long term = 0; term < n_terms; ++term) {
        // The base-6 digits of the term index select one decomposition element
        // per cut; the term weight is the product of the selected signs.
        double coeff = 1.0;
        long rest = term;
        for (int cut = 0; cut < spec.cuts; ++cut) {
            coeff *= spec.cut_weights[static_cast<std::size_t>(rest % 6)];
            rest /= 6;
        }
        if (spec.uniform_unit_coefficients) coeff = 1.0;

        std::vector<int> ids;
        ids.reserve(spec.components);
        for (int comp = 0; comp < spec.components; ++comp) {
            FragmentDescriptor f;
            f.id = next_id++;
            char buf[64];
            std::snprintf(buf, sizeof buf, "sc-%05ld-c%d.qasm", term, comp);
            f.payload_ref = buf;
            f.qubits = jittered(q, spec.metric_jitter, jitter_rng, 1);
            f.depth = jittered(d, spec.metric_jitter, jitter_rng, 1);
            f.two_qubit_gates = jittered(g, spec.metric_jitter, jitter_rng, 0);
            f.total_ops = std::max(jittered(z, spec.metric_jitter, jitter_rng, 0),
                                   f.two_qubit_gates);
            f.coefficient = coeff;
            f.component_id = comp;
            f.validate();
            ids.push_back(f.id);
            w.fragments.push_back(std::move(f));
        }
        w.meta.term_fragments.push_back(std::move(ids));
        w.meta.term_coefficients.push_back(coeff);
    }

    w.meta.validate();
    return w;
}

double reconstruct(const ReconstructionMeta& meta,
                   const std::map<int, double>& expected_values) {
    meta.validate();
    // Neumaier variant of Kahan summation: the correction term also absorbs
    // the case where the addend is larger than the running sum.
    double sum = 0.0;
    double comp = 0.0;
    for (long term = 0; term < meta.n_terms; ++term) {
        double product = meta.term_coefficients[static_cast<std::size_t>(term)];
        for (int id : meta.term_fragments[static_cast<std::size_t>(term)]) {
            const auto it = expected_values.find(id);
            if (it == expected_values.end())
                throw MissingResultError("no stored result for fragment " + std::to_string(id));
            product *= it->second;
        }
        const double t = sum + product;
        if (std::abs(sum) >= std::abs(product))
            comp += (sum - t) + product;
        else
            comp += (product - t) + sum;
        sum = t;
    }
    return meta.global_factor * (sum + comp);
}

}  // namespace dqr
