#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dqr/coordinator.hpp"

using namespace dqr;

namespace {

FragmentDescriptor fragment(int id, std::set<BackendClass> admits = {BackendClass::HPC,
                                                                     BackendClass::QC}) {
    FragmentDescriptor f;
    f.id = id;
    f.qubits = 8;
    f.depth = 16;
    f.two_qubit_gates = 8;
    f.total_ops = 24;
    f.admissible_backends = std::move(admits);
    return f;
}

std::vector<FragmentDescriptor> fragments(int n) {
    std::vector<FragmentDescriptor> fs;
    for (int i = 0; i < n; ++i) fs.push_back(fragment(i));
    return fs;
}

BackendModel hpc_model(double latency = 3.5) {
    BackendModel m;
    m.identity = "hpc-pool";
    m.backend_class = BackendClass::HPC;
    m.latency = LatencyModel::constant(latency);
    return m;
}

BackendModel qc_model(double latency = 15.0) {
    BackendModel m;
    m.identity = "qc-dev";
    m.backend_class = BackendClass::QC;
    m.latency = LatencyModel::constant(latency);
    return m;
}

RuntimeEnvironment env_with(int ranks, int qc_slots) {
    RuntimeEnvironment env;
    env.mpi_ranks = ranks;
    env.qc_slots_total = qc_slots;
    return env;
}

struct Harness {
    SimEngine engine;
    SimulatedBackend hpc;
    SimulatedBackend qc;
    Coordinator coord;

    Harness(std::vector<FragmentDescriptor> fs, std::vector<PlacementLabel> labels,
            RoutingPolicy policy, RuntimeEnvironment env, BackendModel hpc_m = hpc_model(),
            BackendModel qc_m = qc_model(), std::uint64_t seed = 1)
        : hpc(hpc_m, seed),
          qc(qc_m, seed),
          coord(std::move(fs), std::move(labels), &hpc, &qc, policy, env, engine) {}
};

// Scans a finished trace and returns the peak number of concurrently running
// executions per backend identity.
std::map<std::string, long> peak_in_flight(const Trace& trace) {
    std::map<std::string, long> current;
    std::map<std::string, long> peak;
    for (const TraceEvent& ev : trace.events()) {
        if (ev.event == trace_event::dispatch) {
            peak[ev.backend] = std::max(peak[ev.backend], ++current[ev.backend]);
        } else if (ev.event == trace_event::done || ev.event == trace_event::transient_fail ||
                   ev.event == trace_event::permanent_fail) {
            --current[ev.backend];
        }
    }
    return peak;
}

}  // namespace

TEST_CASE("ring worker selection") {
    // Slot 1 busy, cursor at 1: the next free slot is 2 and the cursor moves on.
    std::vector<bool> busy{true, false, false};
    auto [slot, cursor] = select_worker(busy, 1);
    CHECK(slot == 2);
    CHECK(cursor == 3);

    // Wraparound: cursor at the last slot, which is busy.
    busy = {false, false, true};
    std::tie(slot, cursor) = select_worker(busy, 3);
    CHECK(slot == 1);
    CHECK(cursor == 2);

    // Taking the last slot wraps the cursor back to 1.
    busy = {true, true, false};
    std::tie(slot, cursor) = select_worker(busy, 1);
    CHECK(slot == 3);
    CHECK(cursor == 1);

    CHECK_THROWS_AS(select_worker(std::vector<bool>{true, true}, 1), NoFreeWorkerError);
    CHECK_THROWS_AS(select_worker(std::vector<bool>{}, 1), NoFreeWorkerError);
    CHECK_THROWS_AS(select_worker(std::vector<bool>{false}, 2), ConfigError);
}

TEST_CASE("plans are bounded by free slots per pool") {
    // 20 fragments: 5 QC-labeled, 15 HPC-labeled; 12 workers and 3 QC slots.
    std::vector<PlacementLabel> labels;
    for (int i = 0; i < 20; ++i) {
        labels.push_back(i < 5 ? PlacementLabel::QC : PlacementLabel::HPC);
    }
    Harness h(fragments(20), labels, RoutingPolicy{}, env_with(13, 3));

    const CapacitySnapshot cap = h.coord.refresh_capacity();
    CHECK(cap.hpc_slots_free == 12);
    CHECK(cap.qc_slots_free == 3);

    const DispatchPlan plan = h.coord.plan_wave(h.coord.backlog(), cap);
    CHECK(plan.qc.size() == 3);
    CHECK(plan.hpc.size() == 12);
    CHECK(plan.wave_index == 0);

    // QC slots fill lowest-first; workers advance in ring order from slot 1.
    for (std::size_t i = 0; i < plan.qc.size(); ++i) {
        CHECK(plan.qc[i].slot == static_cast<int>(i) + 1);
    }
    for (std::size_t i = 0; i < plan.hpc.size(); ++i) {
        CHECK(plan.hpc[i].slot == static_cast<int>(i) + 1);
    }
    CHECK(plan.ring_cursor_after == 1);  // 12 of 12 workers claimed, wrapped

    // Nothing is dispatched until commit.
    const BacklogView view = h.coord.backlog();
    CHECK(view.qc_pending == 5);
    CHECK(view.hpc_pending == 15);
    CHECK(view.qc_dispatched == 0);
    CHECK(view.hpc_dispatched == 0);
}

TEST_CASE("commit dispatches, traces, and bumps the wave counter") {
    std::vector<PlacementLabel> labels(4, PlacementLabel::HPC);
    Harness h(fragments(4), labels, RoutingPolicy{}, env_with(3, 0));

    CHECK(h.coord.wave() == 0);
    const DispatchPlan plan = h.coord.plan_wave(h.coord.backlog(), h.coord.refresh_capacity());
    CHECK(plan.hpc.size() == 2);
    h.coord.commit(plan);
    CHECK(h.coord.wave() == 1);
    CHECK(h.coord.state(plan.hpc[0].fragment_id).phase == Phase::Dispatched);
    CHECK(h.coord.backlog().hpc_dispatched == 2);

    // An empty plan still advances the wave counter.
    h.coord.commit(DispatchPlan{.wave_index = 1, .hpc = {}, .qc = {}, .ring_cursor_after = -1});
    CHECK(h.coord.wave() == 2);

    int commits = 0;
    for (const TraceEvent& ev : h.coord.trace().events()) {
        if (ev.event == trace_event::wave_commit) ++commits;
    }
    CHECK(commits == 2);
}

TEST_CASE("commit rejects plans touching non-pending fragments or bad slots") {
    std::vector<PlacementLabel> labels(3, PlacementLabel::HPC);
    Harness h(fragments(3), labels, RoutingPolicy{}, env_with(4, 0));

    DispatchPlan plan;
    plan.hpc = {{0, 1}};
    h.coord.commit(plan);

    // Fragment 0 is DISPATCHED now; committing it again must fail.
    DispatchPlan again;
    again.hpc = {{0, 2}};
    CHECK_THROWS_AS(h.coord.commit(again), IllegalTransition);

    // Occupied slot.
    DispatchPlan occupied;
    occupied.hpc = {{1, 1}};
    CHECK_THROWS_AS(h.coord.commit(occupied), ConfigError);

    // Duplicate fragment within one plan.
    DispatchPlan dup;
    dup.hpc = {{1, 2}, {1, 3}};
    CHECK_THROWS_AS(h.coord.commit(dup), ConfigError);

    // Slot out of range.
    DispatchPlan range;
    range.hpc = {{1, 9}};
    CHECK_THROWS_AS(h.coord.commit(range), ConfigError);

    // A rejected plan must leave no partial dispatches behind.
    CHECK(h.coord.state(1).phase == Phase::Pending);
    CHECK(h.coord.state(2).phase == Phase::Pending);
}

TEST_CASE("wave zero backfills Undecided into leftover capacity, later waves hold it") {
    // 2 QC + 2 HPC + 6 Undecided over 4 workers and 3 QC slots.
    std::vector<PlacementLabel> labels{PlacementLabel::QC, PlacementLabel::QC,
                                       PlacementLabel::HPC, PlacementLabel::HPC};
    for (int i = 0; i < 6; ++i) labels.push_back(PlacementLabel::Undecided);

    SUBCASE("iteration-0 preference HPC") {
        RoutingPolicy policy;
        policy.prefer_iter0_undecided = UndecidedPreference::HPC;
        policy.prefer_itern_undecided = UndecidedPreference::HPC;
        Harness h(fragments(10), labels, policy, env_with(5, 3));
        const DispatchPlan plan = h.coord.plan_wave(h.coord.backlog(), h.coord.refresh_capacity());
        // Labeled first: 2 QC, 2 HPC. Leftover: 2 workers, 1 QC slot. The
        // Undecided prefer HPC, so two fill the workers, then one spills to QC.
        CHECK(plan.hpc.size() == 4);
        CHECK(plan.qc.size() == 3);
    }

    SUBCASE("iteration-0 preference QC") {
        RoutingPolicy policy;
        policy.prefer_iter0_undecided = UndecidedPreference::QC;
        Harness h(fragments(10), labels, policy, env_with(5, 3));
        const DispatchPlan plan = h.coord.plan_wave(h.coord.backlog(), h.coord.refresh_capacity());
        CHECK(plan.qc.size() == 3);
        CHECK(plan.hpc.size() == 4);
        // The spare QC slot went to an Undecided fragment before any worker did.
        int undecided_on_qc = 0;
        for (const Assignment& a : plan.qc) {
            if (a.fragment_id >= 4) ++undecided_on_qc;
        }
        CHECK(undecided_on_qc == 1);
    }

    SUBCASE("later waves never spill Undecided across the preference") {
        RoutingPolicy policy;
        policy.prefer_itern_undecided = UndecidedPreference::HPC;
        Harness h(fragments(10), labels, policy, env_with(5, 3));
        // Burn wave 0 with an empty plan so the hard preference applies.
        h.coord.commit(DispatchPlan{});
        const DispatchPlan plan = h.coord.plan_wave(h.coord.backlog(), h.coord.refresh_capacity());
        // 2 QC-labeled take QC slots; the third QC slot stays empty because the
        // Undecided queue only feeds workers now.
        CHECK(plan.qc.size() == 2);
        CHECK(plan.hpc.size() == 4);
    }
}

TEST_CASE("labeled fragments never run on the other pool without failover") {
    // QC-labeled fragments with zero QC capacity stay pending forever: that is
    // a deadlock, not a silent reroute.
    std::vector<PlacementLabel> labels{PlacementLabel::QC, PlacementLabel::QC};
    RuntimeEnvironment env = env_with(3, 0);  // no QC slots at all
    Harness h(fragments(2), labels, RoutingPolicy{}, env);
    const RunOutcome out = h.coord.run();
    CHECK(out.status == RunStatus::Deadlock);
    CHECK(out.succeeded == 0);
    bool saw_deadlock_event = false;
    for (const TraceEvent& ev : out.trace.events()) {
        if (ev.event == trace_event::deadlock) {
            saw_deadlock_event = true;
            CHECK(ev.detail.at("qc_pending") == 2);
        }
        CHECK(ev.event != trace_event::run_complete);
    }
    CHECK(saw_deadlock_event);
}

TEST_CASE("degraded QC suppresses all QC routing") {
    std::vector<PlacementLabel> labels{PlacementLabel::QC, PlacementLabel::HPC};
    RuntimeEnvironment env = env_with(3, 2);
    env.qc_degraded = true;
    Harness h(fragments(2), labels, RoutingPolicy{}, env);

    const CapacitySnapshot cap = h.coord.refresh_capacity();
    CHECK(cap.qc_degraded);
    CHECK(cap.qc_slots_free == 0);
    CHECK(cap.qc_slots_total == 2);

    const RunOutcome out = h.coord.run();
    CHECK(out.status == RunStatus::Deadlock);  // the QC fragment can never move
    CHECK(out.succeeded == 1);                 // but the HPC one finished first
}

TEST_CASE("handle_completion success path frees the slot") {
    std::vector<PlacementLabel> labels{PlacementLabel::QC};
    Harness h(fragments(1), labels, RoutingPolicy{}, env_with(1, 1));
    DispatchPlan plan;
    plan.qc = {{0, 1}};
    h.coord.commit(plan);
    CHECK(h.coord.refresh_capacity().qc_slots_free == 0);

    // Fire the completion through the engine, then apply it.
    while (!h.engine.empty()) h.engine.advance().action();
    const auto evs = h.coord.poll_completions();
    REQUIRE(evs.size() == 1);
    const auto update = h.coord.handle_completion(evs[0]);
    CHECK(update.phase == Phase::Success);
    CHECK(!update.relabeled);
    CHECK(h.coord.refresh_capacity().qc_slots_free == 1);

    // Completions for non-dispatched fragments are a protocol violation.
    CHECK_THROWS_AS(h.coord.handle_completion(evs[0]), IllegalTransition);
}

TEST_CASE("retry budget: transient failures rerun until exhausted, then permanent") {
    // HPC backend that always fails transiently; failover does not apply to
    // HPC-routed work, so exhaustion means PERMANENT_FAILED.
    BackendModel bad_hpc = hpc_model(2.0);
    bad_hpc.failures.transient_rate = 1.0;
    RoutingPolicy policy;
    policy.max_transient_retries = 2;

    std::vector<PlacementLabel> labels{PlacementLabel::HPC};
    Harness h(fragments(1), labels, policy, env_with(2, 0), bad_hpc);
    const RunOutcome out = h.coord.run();

    CHECK(out.status == RunStatus::Complete);
    CHECK(out.succeeded == 0);
    CHECK(out.permanent_failed == 1);
    CHECK(h.coord.state(0).phase == Phase::PermanentFailed);
    CHECK(h.coord.state(0).transient_failure_count == 2);
    CHECK(h.coord.dispatch_count(0, BackendClass::HPC) == 3);  // initial + 2 retries

    int transient = 0, permanent = 0;
    for (const TraceEvent& ev : out.trace.events()) {
        if (ev.event == trace_event::transient_fail) ++transient;
        if (ev.event == trace_event::permanent_fail) ++permanent;
    }
    CHECK(transient == 2);
    CHECK(permanent == 1);
}

TEST_CASE("exhausted QC fragments fail over to HPC when allowed and admissible") {
    BackendModel bad_qc = qc_model(4.0);
    bad_qc.failures.permanent_reject_ids = {0};
    bad_qc.failures.reject_reason = "unsupported control-flow construct: if_else";
    RoutingPolicy policy;
    policy.max_transient_retries = 1;
    policy.allow_failover_qc_to_hpc = true;

    std::vector<PlacementLabel> labels{PlacementLabel::QC};
    Harness h(fragments(1), labels, policy, env_with(2, 1), hpc_model(), bad_qc);
    const RunOutcome out = h.coord.run();

    CHECK(out.status == RunStatus::Complete);
    CHECK(out.succeeded == 1);
    CHECK(out.permanent_failed == 0);
    CHECK(h.coord.label(0) == PlacementLabel::HPC);  // rewritten by failover
    CHECK(h.coord.dispatch_count(0, BackendClass::QC) == 2);
    CHECK(h.coord.dispatch_count(0, BackendClass::HPC) == 1);
    CHECK(h.coord.state(0).transient_failure_count == 2);  // monotone total

    // Event order: fail, fail, relabel, dispatch on HPC, done.
    std::vector<std::string> kinds;
    for (const TraceEvent& ev : out.trace.events()) {
        if (ev.fragment_id == 0 &&
            (ev.event == trace_event::transient_fail || ev.event == trace_event::relabel ||
             ev.event == trace_event::done || ev.event == trace_event::permanent_fail)) {
            kinds.push_back(ev.event);
        }
    }
    CHECK(kinds == std::vector<std::string>{trace_event::transient_fail,
                                            trace_event::transient_fail, trace_event::relabel,
                                            trace_event::done});
}

TEST_CASE("failover disabled or inadmissible HPC means permanent failure") {
    BackendModel bad_qc = qc_model(4.0);
    bad_qc.failures.transient_rate = 1.0;
    RoutingPolicy no_failover;
    no_failover.max_transient_retries = 1;
    no_failover.allow_failover_qc_to_hpc = false;

    SUBCASE("failover off") {
        std::vector<PlacementLabel> labels{PlacementLabel::QC};
        Harness h(fragments(1), labels, no_failover, env_with(2, 1), hpc_model(), bad_qc);
        const RunOutcome out = h.coord.run();
        CHECK(out.permanent_failed == 1);
        CHECK(h.coord.label(0) == PlacementLabel::QC);  // label untouched
    }

    SUBCASE("fragment only admits QC") {
        RoutingPolicy failover_on = no_failover;
        failover_on.allow_failover_qc_to_hpc = true;
        std::vector<FragmentDescriptor> fs{fragment(0, {BackendClass::QC})};
        std::vector<PlacementLabel> labels{PlacementLabel::QC};
        Harness h(std::move(fs), labels, failover_on, env_with(2, 1), hpc_model(), bad_qc);
        const RunOutcome out = h.coord.run();
        CHECK(out.permanent_failed == 1);
        CHECK(h.coord.label(0) == PlacementLabel::QC);
    }
}

TEST_CASE("failover resets the retry budget for the classical pool") {
    // QC rejects fragment 0 always; HPC also fails it transiently twice before
    // succeeding. With max_transient_retries=1 the fragment survives only
    // because the budget restarts after the relabel.
    BackendModel bad_qc = qc_model(1.0);
    bad_qc.failures.permanent_reject_ids = {0};
    BackendModel flaky_hpc = hpc_model(1.0);
    flaky_hpc.failures.transient_rate = 0.35;  // seeded draw: fails once, then succeeds

    RoutingPolicy policy;
    policy.max_transient_retries = 1;
    std::vector<PlacementLabel> labels{PlacementLabel::QC};

    // Find a seed where HPC fails exactly once after failover so the reset is
    // what saves the fragment (without reset: 2 QC + 1 HPC failures > budget).
    for (std::uint64_t seed = 1; seed <= 64; ++seed) {
        Harness h(fragments(1), labels, policy, env_with(2, 1), flaky_hpc, bad_qc, seed);
        const RunOutcome out = h.coord.run();
        CHECK(out.status == RunStatus::Complete);
        if (out.succeeded == 1 && h.coord.state(0).transient_failure_count == 3) {
            // 2 QC failures + 1 HPC transient failure, yet it completed.
            return;
        }
    }
    FAIL("no seed produced the reset-witnessing schedule");
}

TEST_CASE("zero fragments complete immediately after one empty wave") {
    Harness h({}, {}, RoutingPolicy{}, env_with(3, 1));
    const RunOutcome out = h.coord.run();
    CHECK(out.status == RunStatus::Complete);
    CHECK(out.waves == 1);
    CHECK(out.succeeded == 0);
    CHECK(out.trace.events().size() == 3);  // run_config, wave_commit, run_complete
    CHECK(out.trace.events().back().event == trace_event::run_complete);
}

TEST_CASE("staircase: constant latency completes in ceil(n/s) rounds exactly") {
    SUBCASE("14 fragments over 3 slots at 15s") {
        std::vector<PlacementLabel> labels(14, PlacementLabel::QC);
        Harness h(fragments(14), labels, RoutingPolicy{}, env_with(1, 3), hpc_model(),
                  qc_model(15.0));
        const RunOutcome out = h.coord.run();
        CHECK(out.status == RunStatus::Complete);
        double last_done = 0.0;
        for (const TraceEvent& ev : out.trace.events()) {
            if (ev.event == trace_event::done) last_done = ev.t_virtual_s;
        }
        CHECK(last_done == 75.0);  // ceil(14/3) = 5 rounds, exact in doubles
    }
    SUBCASE("14 fragments over 20 slots finish in one round") {
        std::vector<PlacementLabel> labels(14, PlacementLabel::QC);
        Harness h(fragments(14), labels, RoutingPolicy{}, env_with(1, 20), hpc_model(),
                  qc_model(15.0));
        const RunOutcome out = h.coord.run();
        double last_done = 0.0;
        for (const TraceEvent& ev : out.trace.events()) {
            if (ev.event == trace_event::done) last_done = ev.t_virtual_s;
        }
        CHECK(last_done == 15.0);
    }
}

TEST_CASE("in-flight work never exceeds pool capacity") {
    std::vector<PlacementLabel> labels;
    for (int i = 0; i < 40; ++i) {
        labels.push_back(i % 4 == 0 ? PlacementLabel::QC
                                    : (i % 4 == 1 ? PlacementLabel::Undecided
                                                  : PlacementLabel::HPC));
    }
    BackendModel hpc_m = hpc_model();
    hpc_m.latency = LatencyModel::truncated_normal(3.5, 0.4, 2.5, 4.5);
    BackendModel qc_m = qc_model();
    qc_m.latency = LatencyModel::truncated_normal(14.0, 2.0, 10.0, 18.0);
    Harness h(fragments(40), labels, RoutingPolicy{}, env_with(5, 3), hpc_m, qc_m, 77);
    const RunOutcome out = h.coord.run();
    CHECK(out.status == RunStatus::Complete);
    CHECK(out.succeeded == 40);

    const auto peak = peak_in_flight(out.trace);
    CHECK(peak.at("hpc-pool") <= 4);
    CHECK(peak.at("qc-dev") <= 3);
    CHECK(peak.at("hpc-pool") == 4);  // capacity is actually used
    CHECK(peak.at("qc-dev") == 3);
}

TEST_CASE("run can only be called once") {
    Harness h(fragments(1), {PlacementLabel::HPC}, RoutingPolicy{}, env_with(2, 0));
    h.coord.run();
    CHECK_THROWS_AS(h.coord.run(), Error);
}

TEST_CASE("constructor rejects inconsistent inputs") {
    SimEngine engine;
    SimulatedBackend hpc(hpc_model(), 1);
    SimulatedBackend qc(qc_model(), 1);

    // label count mismatch
    CHECK_THROWS_AS(Coordinator(fragments(2), {PlacementLabel::HPC}, &hpc, &qc, RoutingPolicy{},
                                env_with(2, 1), engine),
                    ConfigError);

    // duplicate fragment ids
    std::vector<FragmentDescriptor> dup{fragment(1), fragment(1)};
    CHECK_THROWS_AS(Coordinator(std::move(dup), {PlacementLabel::HPC, PlacementLabel::HPC}, &hpc,
                                &qc, RoutingPolicy{}, env_with(2, 1), engine),
                    ConfigError);

    // backend classes must match their parameter slot
    CHECK_THROWS_AS(Coordinator(fragments(1), {PlacementLabel::HPC}, &qc, &hpc, RoutingPolicy{},
                                env_with(2, 1), engine),
                    ConfigError);

    RuntimeEnvironment env;
    env.mpi_ranks = 0;
    CHECK_THROWS_AS(Coordinator(fragments(1), {PlacementLabel::HPC}, &hpc, &qc, RoutingPolicy{},
                                env, engine),
                    ConfigError);

    RoutingPolicy policy;
    policy.max_transient_retries = -1;
    CHECK_THROWS_AS(Coordinator(fragments(1), {PlacementLabel::HPC}, &hpc, &qc, policy,
                                env_with(2, 1), engine),
                    ConfigError);
}

TEST_CASE("process environment overrides capacity and policy") {
    // Scenario mode ignores the process environment entirely.
    setenv(env_var::qc_slots_total, "9", 1);
    setenv(env_var::qc_degraded, "true", 1);
    RuntimeEnvironment scenario_env = env_with(3, 2);
    CHECK(scenario_env.current_qc_slots_total() == 2);
    CHECK(!scenario_env.current_qc_degraded());

    // Process mode re-reads on every call.
    RuntimeEnvironment process_env = env_with(3, 2);
    process_env.source = RuntimeEnvironment::Source::ProcessEnv;
    CHECK(process_env.current_qc_slots_total() == 9);
    CHECK(process_env.current_qc_degraded());
    setenv(env_var::qc_slots_total, "4", 1);
    setenv(env_var::qc_degraded, "0", 1);
    CHECK(process_env.current_qc_slots_total() == 4);
    CHECK(!process_env.current_qc_degraded());

    unsetenv(env_var::qc_slots_total);
    unsetenv(env_var::qc_degraded);
    CHECK(process_env.current_qc_slots_total() == 2);  // falls back to config

    // Policy overrides with all four variables.
    setenv(env_var::max_transient_retries, "5", 1);
    setenv(env_var::allow_failover_qc_to_hpc, "false", 1);
    setenv(env_var::prefer_iter0_undecided, "QC", 1);
    setenv(env_var::prefer_itern_undecided, "QC", 1);
    RoutingPolicy policy;
    apply_process_env(policy);
    CHECK(policy.max_transient_retries == 5);
    CHECK(!policy.allow_failover_qc_to_hpc);
    CHECK(policy.prefer_iter0_undecided == UndecidedPreference::QC);
    CHECK(policy.prefer_itern_undecided == UndecidedPreference::QC);

    setenv(env_var::max_transient_retries, "not-a-number", 1);
    CHECK_THROWS_AS(apply_process_env(policy), ConfigError);
    setenv(env_var::max_transient_retries, "3", 1);
    setenv(env_var::prefer_iter0_undecided, "GPU", 1);
    CHECK_THROWS_AS(apply_process_env(policy), ConfigError);

    unsetenv(env_var::max_transient_retries);
    unsetenv(env_var::allow_failover_qc_to_hpc);
    unsetenv(env_var::prefer_iter0_undecided);
    unsetenv(env_var::prefer_itern_undecided);
}

TEST_CASE("capacity grown mid-run through the process environment is picked up") {
    std::vector<PlacementLabel> labels(6, PlacementLabel::QC);
    RuntimeEnvironment env = env_with(1, 1);
    env.source = RuntimeEnvironment::Source::ProcessEnv;
    setenv(env_var::qc_slots_total, "1", 1);

    Harness h(fragments(6), labels, RoutingPolicy{}, env, hpc_model(), qc_model(10.0));
    // Wave 0 sees one slot.
    DispatchPlan plan = h.coord.plan_wave(h.coord.backlog(), h.coord.refresh_capacity());
    CHECK(plan.qc.size() == 1);
    h.coord.commit(plan);

    // The operator scales the device up; the next refresh sees three slots.
    setenv(env_var::qc_slots_total, "3", 1);
    plan = h.coord.plan_wave(h.coord.backlog(), h.coord.refresh_capacity());
    CHECK(plan.qc.size() == 2);  // slot 1 busy, slots 2 and 3 free
    unsetenv(env_var::qc_slots_total);
}

TEST_CASE("trace is byte-identical across reruns of the same configuration") {
    const auto run_once = [] {
        std::vector<PlacementLabel> labels;
        for (int i = 0; i < 24; ++i) {
            labels.push_back(i % 3 == 0 ? PlacementLabel::QC : PlacementLabel::HPC);
        }
        BackendModel hpc_m = hpc_model();
        hpc_m.latency = LatencyModel::truncated_normal(3.5, 0.3, 2.8, 4.2);
        hpc_m.failures.transient_rate = 0.1;
        BackendModel qc_m = qc_model();
        qc_m.latency = LatencyModel::truncated_normal(13.0, 1.2, 10.6, 15.4);
        Harness h(fragments(24), labels, RoutingPolicy{}, env_with(4, 2), hpc_m, qc_m, 1234);
        const RunOutcome out = h.coord.run();
        std::ostringstream s;
        out.trace.write_jsonl(s);
        return s.str();
    };
    const std::string first = run_once();
    CHECK(first == run_once());
    CHECK(first.find(trace_event::run_complete) != std::string::npos);
}
