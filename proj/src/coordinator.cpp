#include "dqr/coordinator.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "dqr/errors.hpp"

namespace dqr {

std::string to_string(UndecidedPreference p) {
    return p == UndecidedPreference::QC ? "QC" : "HPC";
}

UndecidedPreference undecided_preference_from_string(const std::string& s) {
    if (s == "QC") return UndecidedPreference::QC;
    if (s == "HPC") return UndecidedPreference::HPC;
    throw ConfigError("unknown undecided preference '" + s + "' (expected QC or HPC)");
}

void RoutingPolicy::validate() const {
    if (max_transient_retries < 0) throw ConfigError("max_transient_retries must be >= 0");
}

void RuntimeEnvironment::validate() const {
    if (mpi_ranks < 1) throw ConfigError("mpi_ranks must be >= 1 (rank 0 coordinates)");
    if (qc_slots_total < 0) throw ConfigError("qc_slots_total must be >= 0");
}

namespace {

const char* read_env(const char* name) { return std::getenv(name); }

int parse_env_int(const char* name, const char* raw) {
    try {
        std::size_t used = 0;
        const std::string text(raw);
        const int value = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        throw ConfigError(std::string(name) + ": cannot parse '" + raw + "' as an integer");
    }
}

bool parse_env_bool(const char* name, const char* raw) {
    const std::string text(raw);
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw ConfigError(std::string(name) + ": cannot parse '" + raw + "' as a boolean (use 0/1/true/false)");
}

}  // namespace

int RuntimeEnvironment::current_qc_slots_total() const {
    if (source == Source::ProcessEnv) {
        if (const char* raw = read_env(env_var::qc_slots_total)) {
            const int value = parse_env_int(env_var::qc_slots_total, raw);
            if (value < 0) throw ConfigError(std::string(env_var::qc_slots_total) + " must be >= 0");
            return value;
        }
    }
    return qc_slots_total;
}

bool RuntimeEnvironment::current_qc_degraded() const {
    if (source == Source::ProcessEnv) {
        if (const char* raw = read_env(env_var::qc_degraded)) {
            return parse_env_bool(env_var::qc_degraded, raw);
        }
    }
    return qc_degraded;
}

void apply_process_env(RoutingPolicy& policy) {
    if (const char* raw = read_env(env_var::max_transient_retries)) {
        policy.max_transient_retries = parse_env_int(env_var::max_transient_retries, raw);
    }
    if (const char* raw = read_env(env_var::allow_failover_qc_to_hpc)) {
        policy.allow_failover_qc_to_hpc = parse_env_bool(env_var::allow_failover_qc_to_hpc, raw);
    }
    if (const char* raw = read_env(env_var::prefer_iter0_undecided)) {
        policy.prefer_iter0_undecided = undecided_preference_from_string(raw);
    }
    if (const char* raw = read_env(env_var::prefer_itern_undecided)) {
        policy.prefer_itern_undecided = undecided_preference_from_string(raw);
    }
    policy.validate();
}

void apply_process_env(RuntimeEnvironment& env) {
    if (const char* raw = read_env(env_var::qc_slots_total)) {
        env.qc_slots_total = parse_env_int(env_var::qc_slots_total, raw);
    }
    if (const char* raw = read_env(env_var::qc_degraded)) {
        env.qc_degraded = parse_env_bool(env_var::qc_degraded, raw);
    }
    env.validate();
}

std::pair<int, int> select_worker(const std::vector<bool>& busy_by_slot, int cursor) {
    const int n = static_cast<int>(busy_by_slot.size());
    if (n == 0) throw NoFreeWorkerError("no worker slots configured");
    if (cursor < 1 || cursor > n) throw ConfigError("ring cursor out of range");
    for (int k = 0; k < n; ++k) {
        const int slot = (cursor - 1 + k) % n + 1;
        if (!busy_by_slot[slot - 1]) return {slot, slot % n + 1};
    }
    throw NoFreeWorkerError("all " + std::to_string(n) + " worker slots busy");
}

Coordinator::Coordinator(std::vector<FragmentDescriptor> fragments,
                         std::vector<PlacementLabel> labels, SimulatedBackend* hpc,
                         SimulatedBackend* qc, RoutingPolicy policy, RuntimeEnvironment env,
                         SimEngine& engine)
    : fragments_(std::move(fragments)),
      labels_(std::move(labels)),
      hpc_(hpc),
      qc_(qc),
      policy_(policy),
      env_(env),
      engine_(engine) {
    if (labels_.size() != fragments_.size()) {
        throw ConfigError("one placement label per fragment required");
    }
    policy_.validate();
    env_.validate();
    if (hpc_ && hpc_->model().backend_class != BackendClass::HPC) {
        throw ConfigError("hpc backend has class " + to_string(hpc_->model().backend_class));
    }
    if (qc_ && qc_->model().backend_class != BackendClass::QC) {
        throw ConfigError("qc backend has class " + to_string(qc_->model().backend_class));
    }
    for (std::size_t i = 0; i < fragments_.size(); ++i) {
        fragments_[i].validate();
        if (!by_id_.emplace(fragments_[i].id, i).second) {
            throw ConfigError("duplicate fragment id " + std::to_string(fragments_[i].id));
        }
    }
    states_.assign(fragments_.size(), FragmentState{});
    failures_since_relabel_.assign(fragments_.size(), 0);
    pending_count_ = static_cast<long>(fragments_.size());
    worker_busy_.assign(static_cast<std::size_t>(std::max(env_.worker_count(), 0)), false);
    qc_busy_.assign(static_cast<std::size_t>(env_.qc_slots_total), false);
}

std::size_t Coordinator::index_of(int fragment_id) const {
    const auto it = by_id_.find(fragment_id);
    if (it == by_id_.end()) throw ConfigError("unknown fragment id " + std::to_string(fragment_id));
    return it->second;
}

FragmentState Coordinator::state(int fragment_id) const { return states_[index_of(fragment_id)]; }

PlacementLabel Coordinator::label(int fragment_id) const { return labels_[index_of(fragment_id)]; }

int Coordinator::dispatch_count(int fragment_id, BackendClass c) const {
    const auto it = dispatches_by_class_.find(fragment_id);
    if (it == dispatches_by_class_.end()) return 0;
    return it->second[static_cast<std::size_t>(c)];
}

std::vector<CompletionEvent> Coordinator::poll_completions() { return completions_.drain(); }

Coordinator::Update Coordinator::handle_completion(const CompletionEvent& ev) {
    const std::size_t idx = index_of(ev.fragment_id);
    const FragmentDescriptor& frag = fragments_[idx];
    FragmentState& st = states_[idx];
    if (st.phase != Phase::Dispatched) {
        throw IllegalTransition("completion for fragment " + std::to_string(ev.fragment_id) +
                                " in phase '" + to_string(st.phase) + "'");
    }

    // Slot is free again whatever the outcome.
    if (ev.backend_class == BackendClass::HPC) {
        if (ev.slot >= 1 && ev.slot <= static_cast<int>(worker_busy_.size())) {
            worker_busy_[ev.slot - 1] = false;
        }
    } else if (ev.slot >= 1 && ev.slot <= static_cast<int>(qc_busy_.size())) {
        qc_busy_[ev.slot - 1] = false;
    }
    --dispatched_count_;

    const double t = engine_.now();
    if (ev.success) {
        st = transition(st, LifecycleEvent::Done);
        ++succeeded_;
        trace_.append({t, wave_, ev.fragment_id, trace_event::done, ev.backend_identity, ""});
        return {st.phase, false};
    }

    const bool qc_routed = ev.backend_class == BackendClass::QC;
    const int failures_now = failures_since_relabel_[idx] + 1;
    nlohmann::ordered_json fail_detail{{"reason", ev.reason}, {"failures", failures_now}};

    if (failures_now <= policy_.max_transient_retries) {
        st = transition(st, LifecycleEvent::TransientFail);
        failures_since_relabel_[idx] = failures_now;
        ++pending_count_;
        trace_.append(
            {t, wave_, ev.fragment_id, trace_event::transient_fail, ev.backend_identity, fail_detail});
        return {st.phase, false};
    }

    if (qc_routed && policy_.allow_failover_qc_to_hpc && frag.admits(BackendClass::HPC)) {
        st = transition(st, LifecycleEvent::TransientFail);
        failures_since_relabel_[idx] = 0;  // fresh retry budget on the classical path
        ++pending_count_;
        trace_.append(
            {t, wave_, ev.fragment_id, trace_event::transient_fail, ev.backend_identity, fail_detail});
        labels_[idx] = PlacementLabel::HPC;
        trace_.append({t, wave_, ev.fragment_id, trace_event::relabel, ev.backend_identity,
                       nlohmann::ordered_json{{"from", "QC"}, {"to", "HPC"}}});
        return {st.phase, true};
    }

    st = transition(st, LifecycleEvent::PermanentFail);
    ++permanent_failed_;
    trace_.append({t, wave_, ev.fragment_id, trace_event::permanent_fail, ev.backend_identity,
                   nlohmann::ordered_json{{"reason", ev.reason}, {"failures", failures_now}}});
    return {st.phase, false};
}

CapacitySnapshot Coordinator::refresh_capacity() {
    CapacitySnapshot cap;
    cap.qc_slots_total = env_.current_qc_slots_total();
    cap.qc_degraded = env_.current_qc_degraded() || (qc_ && qc_->model().degraded);
    if (static_cast<int>(qc_busy_.size()) < cap.qc_slots_total) {
        qc_busy_.resize(static_cast<std::size_t>(cap.qc_slots_total), false);
    }
    const long busy_workers = std::count(worker_busy_.begin(), worker_busy_.end(), true);
    cap.hpc_slots_free = static_cast<int>(worker_busy_.size()) - static_cast<int>(busy_workers);
    if (cap.qc_degraded) {
        cap.qc_slots_free = 0;
    } else {
        long busy_qc = 0;
        for (int i = 0; i < cap.qc_slots_total && i < static_cast<int>(qc_busy_.size()); ++i) {
            if (qc_busy_[i]) ++busy_qc;
        }
        cap.qc_slots_free = std::max(0, cap.qc_slots_total - static_cast<int>(busy_qc));
    }
    return cap;
}

BacklogView Coordinator::backlog() const {
    BacklogView view;
    for (std::size_t i = 0; i < fragments_.size(); ++i) {
        const Phase phase = states_[i].phase;
        if (phase == Phase::Pending) {
            switch (labels_[i]) {
                case PlacementLabel::QC: ++view.qc_pending; break;
                case PlacementLabel::HPC: ++view.hpc_pending; break;
                case PlacementLabel::Undecided: ++view.undecided_pending; break;
            }
        } else if (phase == Phase::Dispatched) {
            // Dispatch resolves Undecided, so in-flight work is two-valued.
            if (labels_[i] == PlacementLabel::QC) {
                ++view.qc_dispatched;
            } else {
                ++view.hpc_dispatched;
            }
        }
    }
    return view;
}

DispatchPlan Coordinator::plan_wave(const BacklogView&, const CapacitySnapshot& cap) {
    DispatchPlan plan;
    plan.wave_index = wave_;

    int hpc_free = hpc_ ? cap.hpc_slots_free : 0;
    int qc_free = qc_ ? cap.qc_slots_free : 0;

    std::vector<int> pend_qc;
    std::vector<int> pend_hpc;
    std::vector<int> pend_und;
    for (std::size_t i = 0; i < fragments_.size(); ++i) {
        if (states_[i].phase != Phase::Pending) continue;
        switch (labels_[i]) {
            case PlacementLabel::QC: pend_qc.push_back(fragments_[i].id); break;
            case PlacementLabel::HPC: pend_hpc.push_back(fragments_[i].id); break;
            case PlacementLabel::Undecided: pend_und.push_back(fragments_[i].id); break;
        }
    }
    const auto ascending_id = [](int a, int b) { return a < b; };
    std::sort(pend_qc.begin(), pend_qc.end(), ascending_id);
    std::sort(pend_hpc.begin(), pend_hpc.end(), ascending_id);
    std::sort(pend_und.begin(), pend_und.end(), ascending_id);

    std::vector<bool> workers = worker_busy_;
    std::vector<bool> qc_slots = qc_busy_;
    int cursor = ring_cursor_;
    if (workers.empty()) {
        hpc_free = 0;
    } else if (cursor < 1 || cursor > static_cast<int>(workers.size())) {
        cursor = 1;
    }

    const auto fill_qc = [&](std::vector<int>& src) {
        for (auto it = src.begin(); qc_free > 0 && it != src.end();) {
            if (!fragments_[index_of(*it)].admits(BackendClass::QC)) {
                ++it;
                continue;
            }
            int slot = 0;
            for (std::size_t s = 0; s < qc_slots.size(); ++s) {
                if (!qc_slots[s]) {
                    slot = static_cast<int>(s) + 1;
                    break;
                }
            }
            if (slot == 0) break;  // snapshot promised more than the tracker has
            qc_slots[slot - 1] = true;
            --qc_free;
            plan.qc.push_back({*it, slot});
            it = src.erase(it);
        }
    };
    const auto fill_hpc = [&](std::vector<int>& src) {
        for (auto it = src.begin(); hpc_free > 0 && it != src.end();) {
            if (!fragments_[index_of(*it)].admits(BackendClass::HPC)) {
                ++it;
                continue;
            }
            const auto [slot, next] = select_worker(workers, cursor);
            workers[slot - 1] = true;
            cursor = next;
            --hpc_free;
            plan.hpc.push_back({*it, slot});
            it = src.erase(it);
        }
    };

    fill_qc(pend_qc);
    fill_hpc(pend_hpc);
    if (wave_ == 0) {
        if (policy_.prefer_iter0_undecided == UndecidedPreference::QC) {
            fill_qc(pend_und);
            fill_hpc(pend_und);
        } else {
            fill_hpc(pend_und);
            fill_qc(pend_und);
        }
    } else if (policy_.prefer_itern_undecided == UndecidedPreference::QC) {
        fill_qc(pend_und);
    } else {
        fill_hpc(pend_und);
    }

    plan.ring_cursor_after = plan.hpc.empty() ? -1 : cursor;
    return plan;
}

void Coordinator::commit(const DispatchPlan& plan) {
    // Validate the whole plan before touching any state.
    std::set<int> seen;
    const auto check = [&](const Assignment& a, BackendClass pool, const std::vector<bool>& busy) {
        const std::size_t idx = index_of(a.fragment_id);
        if (states_[idx].phase != Phase::Pending) {
            throw IllegalTransition("cannot dispatch fragment " + std::to_string(a.fragment_id) +
                                    " in phase '" + to_string(states_[idx].phase) + "'");
        }
        if (!seen.insert(a.fragment_id).second) {
            throw ConfigError("fragment " + std::to_string(a.fragment_id) + " planned twice");
        }
        if (!fragments_[idx].admits(pool)) {
            throw ConfigError("fragment " + std::to_string(a.fragment_id) + " does not admit " +
                              to_string(pool));
        }
        if (a.slot < 1 || a.slot > static_cast<int>(busy.size()) || busy[a.slot - 1]) {
            throw ConfigError("slot " + std::to_string(a.slot) + " not free on " + to_string(pool));
        }
        if (pool == BackendClass::HPC && !hpc_) throw ConfigError("no hpc backend configured");
        if (pool == BackendClass::QC && !qc_) throw ConfigError("no qc backend configured");
    };
    {
        std::vector<bool> workers = worker_busy_;
        std::vector<bool> qc_slots = qc_busy_;
        for (const Assignment& a : plan.hpc) {
            check(a, BackendClass::HPC, workers);
            workers[a.slot - 1] = true;
        }
        for (const Assignment& a : plan.qc) {
            check(a, BackendClass::QC, qc_slots);
            qc_slots[a.slot - 1] = true;
        }
    }

    for (const Assignment& a : plan.hpc) dispatch_one(a, BackendClass::HPC);
    for (const Assignment& a : plan.qc) dispatch_one(a, BackendClass::QC);
    if (plan.ring_cursor_after >= 1) ring_cursor_ = plan.ring_cursor_after;

    trace_.append({engine_.now(), wave_, -1, trace_event::wave_commit, "",
                   nlohmann::ordered_json{{"dispatched_hpc", plan.hpc.size()},
                                          {"dispatched_qc", plan.qc.size()},
                                          {"pending", pending_count_},
                                          {"in_flight", dispatched_count_}}});
    ++wave_;
}

void Coordinator::dispatch_one(const Assignment& a, BackendClass pool) {
    const std::size_t idx = index_of(a.fragment_id);
    states_[idx] = transition(states_[idx], LifecycleEvent::Dispatch);
    --pending_count_;
    ++dispatched_count_;

    bool resolved = false;
    if (labels_[idx] == PlacementLabel::Undecided) {
        labels_[idx] = pool == BackendClass::QC ? PlacementLabel::QC : PlacementLabel::HPC;
        resolved = true;
    }

    SimulatedBackend& backend = pool == BackendClass::HPC ? *hpc_ : *qc_;
    if (pool == BackendClass::HPC) {
        worker_busy_[a.slot - 1] = true;
    } else {
        qc_busy_[a.slot - 1] = true;
    }
    auto& counts = dispatches_by_class_.try_emplace(a.fragment_id, std::array<int, 2>{0, 0})
                       .first->second;
    const int attempt = ++counts[static_cast<std::size_t>(pool)];

    backend.submit(fragments_[idx], a.slot, engine_, completions_, store_);

    nlohmann::ordered_json detail{{"slot", a.slot}, {"attempt", attempt}};
    if (resolved) detail["resolved_undecided"] = true;
    trace_.append({engine_.now(), wave_, a.fragment_id, trace_event::dispatch,
                   backend.model().identity, detail});
}

void Coordinator::advance_to_next_batch() {
    if (engine_.empty()) {
        throw Error("internal: work in flight but the event queue is empty");
    }
    engine_.advance().action();
    while (!engine_.empty() && *engine_.next_time() <= engine_.now()) {
        engine_.advance().action();
    }
}

nlohmann::ordered_json Coordinator::config_json() const {
    nlohmann::ordered_json backends = nlohmann::ordered_json::object();
    if (hpc_) backends[hpc_->model().identity] = to_string(BackendClass::HPC);
    if (qc_) backends[qc_->model().identity] = to_string(BackendClass::QC);
    return nlohmann::ordered_json{
        {"n_fragments", fragments_.size()},
        {"mpi_ranks", env_.mpi_ranks},
        {"workers", env_.worker_count()},
        {"qc_slots_total", env_.current_qc_slots_total()},
        {"qc_degraded", env_.current_qc_degraded()},
        {"max_transient_retries", policy_.max_transient_retries},
        {"allow_failover_qc_to_hpc", policy_.allow_failover_qc_to_hpc},
        {"prefer_iter0_undecided", to_string(policy_.prefer_iter0_undecided)},
        {"prefer_itern_undecided", to_string(policy_.prefer_itern_undecided)},
        {"backend_classes", backends},
    };
}

RunOutcome Coordinator::run(const nlohmann::ordered_json& extra_config,
                            const RunFinalizer& finalizer) {
    if (ran_) throw Error("run() may only be called once per coordinator");
    ran_ = true;

    nlohmann::ordered_json config = config_json();
    for (const auto& [key, value] : extra_config.items()) config[key] = value;
    trace_.append({engine_.now(), wave_, -1, trace_event::run_config, "", config});

    RunStatus status = RunStatus::Complete;
    while (true) {
        for (const CompletionEvent& ev : poll_completions()) handle_completion(ev);
        const CapacitySnapshot cap = refresh_capacity();
        const DispatchPlan plan = plan_wave(backlog(), cap);
        commit(plan);
        if (pending_count_ == 0 && dispatched_count_ == 0) break;
        if (dispatched_count_ == 0) {
            // Nothing in flight, nothing plannable, fragments still pending.
            const BacklogView stuck = backlog();
            trace_.append({engine_.now(), wave_, -1, trace_event::deadlock, "",
                           nlohmann::ordered_json{{"pending", pending_count_},
                                                  {"qc_pending", stuck.qc_pending},
                                                  {"hpc_pending", stuck.hpc_pending},
                                                  {"undecided_pending", stuck.undecided_pending}}});
            status = RunStatus::Deadlock;
            break;
        }
        if (plan.empty()) advance_to_next_batch();
    }

    if (status == RunStatus::Complete) {
        nlohmann::ordered_json detail{{"status", "complete"},
                                      {"waves", wave_},
                                      {"succeeded", succeeded_},
                                      {"permanent_failed", permanent_failed_}};
        if (finalizer) {
            const nlohmann::ordered_json extras = finalizer(store_);
            for (const auto& [key, value] : extras.items()) detail[key] = value;
        }
        trace_.append({engine_.now(), wave_, -1, trace_event::run_complete, "", detail});
    }

    RunOutcome outcome;
    outcome.status = status;
    outcome.waves = wave_;
    outcome.succeeded = succeeded_;
    outcome.permanent_failed = permanent_failed_;
    outcome.trace = std::move(trace_);
    outcome.results = store_.all();
    trace_ = Trace{};
    return outcome;
}

}  // namespace dqr
