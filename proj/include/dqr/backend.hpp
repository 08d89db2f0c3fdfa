#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dqr/fragment.hpp"
#include "dqr/rng.hpp"
#include "dqr/sim.hpp"
#include <nlohmann/json.hpp>

namespace dqr {

enum class LatencyKind { Constant, TruncatedNormal, Empirical };

// Round-trip latency distribution of one backend. A sample covers everything
// between dispatch and completion (queue wait, transfer, execution), matching
// how remote-QPU round trips are observed from the coordinator.
struct LatencyModel {
    LatencyKind kind = LatencyKind::Constant;
    double mean = 1.0;       // constant value or normal mean
    double stddev = 0.0;
    double min = 0.0;        // truncation window for TruncatedNormal
    double max = 0.0;
    std::vector<double> values;  // Empirical: sampled uniformly with replacement

    void validate() const;       // throws ConfigError
    double sample(SplitMix64& rng) const;

    static LatencyModel constant(double value);
    static LatencyModel truncated_normal(double mean, double stddev, double min, double max);
    static LatencyModel empirical(std::vector<double> values);
};

// Deterministic fault model: a per-execution transient failure probability
// plus a set of fragment ids this backend always rejects (with the given
// reason), which is how a backend that cannot run a construct behaves.
struct FailureInjection {
    double transient_rate = 0.0;
    std::set<int> permanent_reject_ids;
    std::string reject_reason = "backend rejected fragment";

    void validate() const;  // throws ConfigError
};

struct BackendModel {
    std::string identity = "backend";
    BackendClass backend_class = BackendClass::HPC;
    int slots = 1;
    LatencyModel latency;
    FailureInjection failures;
    bool degraded = false;  // QC flag: suppresses all routing to this backend
    int shots = 1024;

    void validate() const;  // throws ConfigError
};

// What the coordinator learns when an execution finishes. Deliberately tiny:
// result payloads never ride on coordinator messages, they go to the store.
struct CompletionEvent {
    double time = 0.0;
    int fragment_id = 0;
    std::string backend_identity;
    BackendClass backend_class = BackendClass::HPC;
    int slot = 0;
    bool success = true;
    std::string reason;  // empty on success
};

// Append side may be called from other execution contexts; drain happens on
// the coordinator loop.
class CompletionQueue {
public:
    void push(CompletionEvent e);
    std::vector<CompletionEvent> drain();
    bool empty() const;

private:
    mutable std::mutex mutex_;
    std::vector<CompletionEvent> queue_;
};

// Shared result sink keyed by fragment id; executions deposit, the
// reconstruction step reads.
class ResultStore {
public:
    void deposit(FragmentResult r);
    const FragmentResult* find(int fragment_id) const;
    std::map<int, double> expected_values() const;
    const std::map<int, FragmentResult>& all() const { return results_; }

private:
    mutable std::mutex mutex_;
    std::map<int, FragmentResult> results_;
};

// One configured backend bound to the event queue. Sampling streams are
// derived from (run seed, identity, purpose) so backends never share a
// sequence and scenario edits do not reshuffle unrelated draws.
class SimulatedBackend {
public:
    SimulatedBackend(BackendModel model, std::uint64_t run_seed,
                     const std::map<int, double>* pinned_expected_values = nullptr);

    const BackendModel& model() const { return model_; }

    // Samples outcome and latency, schedules the completion on `engine`, and
    // wires the deposit + queue push to fire at completion time.
    // Returns the sampled latency (the caller logs it, nothing else needs it).
    double submit(const FragmentDescriptor& fragment, int slot, SimEngine& engine,
                  CompletionQueue& completions, ResultStore& store);

private:
    BackendModel model_;
    SplitMix64 latency_rng_;
    SplitMix64 failure_rng_;
    SplitMix64 value_rng_;
    const std::map<int, double>* pinned_expected_values_;
};

// Serialize a result to its interchange document (schema "qcore.result.v1").
nlohmann::ordered_json result_document(const FragmentResult& r);
FragmentResult parse_result_document(const nlohmann::json& doc);  // throws ConfigError

}  // namespace dqr
