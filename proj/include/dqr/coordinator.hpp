#pragma once

#include <map>
#include <utility>
#include <vector>

#include "dqr/backend.hpp"
#include "dqr/fragment.hpp"
#include "dqr/sim.hpp"

namespace dqr {

enum class UndecidedPreference { HPC, QC };

std::string to_string(UndecidedPreference p);
UndecidedPreference undecided_preference_from_string(const std::string& s);

struct RoutingPolicy {
    int max_transient_retries = 1;
    bool allow_failover_qc_to_hpc = true;
    // Wave 0 fills labeled fragments first, then Undecided into whatever is
    // left, preferred pool first. From wave 1 on the preference is hard:
    // Undecided queue for their preferred pool only.
    UndecidedPreference prefer_iter0_undecided = UndecidedPreference::HPC;
    UndecidedPreference prefer_itern_undecided = UndecidedPreference::HPC;

    void validate() const;  // throws ConfigError
};

// Where capacity numbers come from at each refresh: fixed scenario values, or
// the DQR_* process environment re-read every wave.
struct RuntimeEnvironment {
    enum class Source { Scenario, ProcessEnv };
    Source source = Source::Scenario;
    int mpi_ranks = 2;  // rank 0 coordinates, the rest are worker slots
    int qc_slots_total = 0;
    bool qc_degraded = false;

    void validate() const;  // throws ConfigError
    int worker_count() const { return mpi_ranks - 1; }
    int current_qc_slots_total() const;
    bool current_qc_degraded() const;
};

// Environment variable names honored in process mode.
namespace env_var {
inline constexpr const char* qc_slots_total = "DQR_QC_SLOTS_TOTAL";
inline constexpr const char* qc_degraded = "DQR_QC_DEGRADED";
inline constexpr const char* max_transient_retries = "DQR_MAX_TRANSIENT_RETRIES";
inline constexpr const char* allow_failover_qc_to_hpc = "DQR_ALLOW_FAILOVER_QC_TO_HPC";
inline constexpr const char* prefer_iter0_undecided = "DQR_PREFER_ITER0_UNDECIDED";
inline constexpr const char* prefer_itern_undecided = "DQR_PREFER_ITERN_UNDECIDED";
}  // namespace env_var

// Overwrite fields whose environment variable is set; unset vars keep the
// configured value. Throws ConfigError on unparsable values.
void apply_process_env(RoutingPolicy& policy);
void apply_process_env(RuntimeEnvironment& env);

struct CapacitySnapshot {
    int hpc_slots_free = 0;
    int qc_slots_total = 0;
    int qc_slots_free = 0;  // reported as 0 while degraded
    bool qc_degraded = false;
};

struct Assignment {
    int fragment_id = 0;
    int slot = 0;  // worker rank for HPC, session index for QC; 1-based
};

struct DispatchPlan {
    int wave_index = 0;
    std::vector<Assignment> hpc;
    std::vector<Assignment> qc;
    // Ring position after the planned worker selections; commit() adopts it.
    // -1 on hand-built plans leaves the cursor alone.
    int ring_cursor_after = -1;

    bool empty() const { return hpc.empty() && qc.empty(); }
};

struct BacklogView {
    long qc_pending = 0;
    long hpc_pending = 0;
    long undecided_pending = 0;
    long qc_dispatched = 0;
    long hpc_dispatched = 0;
};

// Next free worker slot at or after `cursor` in ring order (1-based slots,
// wrapping). Returns {slot, cursor after it}. Throws NoFreeWorkerError.
std::pair<int, int> select_worker(const std::vector<bool>& busy_by_slot, int cursor);

enum class RunStatus { Complete, Deadlock };

struct RunOutcome {
    RunStatus status = RunStatus::Complete;
    int waves = 0;
    long succeeded = 0;
    long permanent_failed = 0;
    Trace trace;
    std::map<int, FragmentResult> results;
};

// Builds the extra payload of the run_complete trace event once all fragments
// are terminal (reconstruction summary, for example).
using RunFinalizer = std::function<nlohmann::ordered_json(const ResultStore&)>;

// Wave-based dispatch loop. One instance drives one run to completion:
//
//   poll completions -> handle failures/failover -> refresh capacity ->
//   plan -> commit (dispatch + wave counter) -> repeat
//
// The loop never blocks on any single backend: completions are harvested in
// whatever order they arrive, and the virtual clock only advances when a wave
// committed an empty plan while work was still in flight. A wave that commits
// an empty plan with nothing in flight but fragments still pending is a
// deadlock and ends the run with RunStatus::Deadlock.
class Coordinator {
public:
    // `qc` may be null (no quantum backend configured); `hpc` likewise for
    // QC-only setups. Labels run parallel to `fragments`.
    Coordinator(std::vector<FragmentDescriptor> fragments, std::vector<PlacementLabel> labels,
                SimulatedBackend* hpc, SimulatedBackend* qc, RoutingPolicy policy,
                RuntimeEnvironment env, SimEngine& engine);

    std::vector<CompletionEvent> poll_completions();

    struct Update {
        Phase phase = Phase::Pending;
        bool relabeled = false;
    };
    // Applies one completion: success, retry, failover relabel or permanent
    // failure. Throws IllegalTransition unless the fragment is DISPATCHED.
    Update handle_completion(const CompletionEvent& ev);

    CapacitySnapshot refresh_capacity();
    BacklogView backlog() const;

    // Routing for the current wave. Wave 0 saturates labeled pools first and
    // backfills Undecided (preferred pool, then the other); later waves route
    // QC-labeled first and hold Undecided for their preferred pool only.
    // Bounded by free slots per pool; advances the tentative ring cursor.
    DispatchPlan plan_wave(const BacklogView& view, const CapacitySnapshot& cap);

    // Validates, dispatches every assignment, then increments the wave counter
    // (also for empty plans). Throws IllegalTransition / ConfigError without
    // having dispatched anything.
    void commit(const DispatchPlan& plan);

    // Runs to completion or deadlock. `extra_config` is merged into the
    // run_config trace header (scenario constants live there).
    RunOutcome run(const nlohmann::ordered_json& extra_config = nlohmann::ordered_json::object(),
                   const RunFinalizer& finalizer = {});

    int wave() const { return wave_; }
    const Trace& trace() const { return trace_; }
    const ResultStore& results() const { return store_; }
    CompletionQueue& completion_queue() { return completions_; }
    FragmentState state(int fragment_id) const;
    PlacementLabel label(int fragment_id) const;
    int dispatch_count(int fragment_id, BackendClass c) const;

private:
    std::size_t index_of(int fragment_id) const;
    void dispatch_one(const Assignment& a, BackendClass pool);
    void advance_to_next_batch();
    nlohmann::ordered_json config_json() const;

    std::vector<FragmentDescriptor> fragments_;
    std::vector<PlacementLabel> labels_;
    std::vector<FragmentState> states_;
    std::vector<int> failures_since_relabel_;  // retry budget, reset by failover
    std::map<int, std::size_t> by_id_;
    std::map<int, std::array<int, 2>> dispatches_by_class_;

    SimulatedBackend* hpc_;
    SimulatedBackend* qc_;
    RoutingPolicy policy_;
    RuntimeEnvironment env_;
    SimEngine& engine_;

    CompletionQueue completions_;
    ResultStore store_;
    Trace trace_;

    std::vector<bool> worker_busy_;  // index = slot - 1
    std::vector<bool> qc_busy_;
    int ring_cursor_ = 1;
    int wave_ = 0;
    long pending_count_ = 0;
    long dispatched_count_ = 0;
    long succeeded_ = 0;
    long permanent_failed_ = 0;
    bool ran_ = false;
};

}  // namespace dqr
