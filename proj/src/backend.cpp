#include "dqr/backend.hpp"

#include <algorithm>

namespace dqr {

void LatencyModel::validate() const {
    switch (kind) {
        case LatencyKind::Constant:
            if (mean <= 0) throw ConfigError("constant latency must be positive");
            break;
        case LatencyKind::TruncatedNormal:
            if (stddev < 0) throw ConfigError("latency stddev must be non-negative");
            if (min <= 0 || max < min)
                throw ConfigError("truncated normal latency needs 0 < min <= max");
            break;
        case LatencyKind::Empirical:
            if (values.empty()) throw ConfigError("empirical latency list is empty");
            for (double v : values)
                if (v <= 0) throw ConfigError("empirical latency values must be positive");
            break;
    }
}

double LatencyModel::sample(SplitMix64& rng) const {
    switch (kind) {
        case LatencyKind::Constant:
            return mean;
        case LatencyKind::TruncatedNormal: {
            // Rejection-sample the window; after 100 misses fall back to a
            // clamp so pathological windows cannot stall the simulation.
            for (int i = 0; i < 100; ++i) {
                const double v = rng.normal(mean, stddev);
                if (v >= min && v <= max) return v;
            }
            return std::clamp(rng.normal(mean, stddev), min, max);
        }
        case LatencyKind::Empirical:
            return values[rng.index(values.size())];
    }
    throw Error("unreachable latency kind");
}

LatencyModel LatencyModel::constant(double value) {
    LatencyModel m;
    m.kind = LatencyKind::Constant;
    m.mean = value;
    m.validate();
    return m;
}

LatencyModel LatencyModel::truncated_normal(double mean, double stddev, double min, double max) {
    LatencyModel m;
    m.kind = LatencyKind::TruncatedNormal;
    m.mean = mean;
    m.stddev = stddev;
    m.min = min;
    m.max = max;
    m.validate();
    return m;
}

LatencyModel LatencyModel::empirical(std::vector<double> values) {
    LatencyModel m;
    m.kind = LatencyKind::Empirical;
    m.values = std::move(values);
    m.validate();
    return m;
}

void FailureInjection::validate() const {
    if (transient_rate < 0 || transient_rate > 1)
        throw ConfigError("transient_rate must lie in [0, 1]");
    for (const int id : permanent_reject_ids) {
        if (id < 0) throw ConfigError("permanent_reject_ids must be non-negative");
    }
}

void BackendModel::validate() const {
    if (identity.empty()) throw ConfigError("backend identity must not be empty");
    if (slots < 1) throw ConfigError("backend slots must be positive");
    if (shots <= 0) throw ConfigError("backend shots must be positive");
    latency.validate();
    failures.validate();
}

void CompletionQueue::push(CompletionEvent e) {
    std::lock_guard<std::mutex> lock(mutex_);
    queue_.push_back(std::move(e));
}

std::vector<CompletionEvent> CompletionQueue::drain() {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<CompletionEvent> out;
    out.swap(queue_);
    return out;
}

bool CompletionQueue::empty() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return queue_.empty();
}

void ResultStore::deposit(FragmentResult r) {
    r.validate();
    std::lock_guard<std::mutex> lock(mutex_);
    results_[r.fragment_id] = std::move(r);
}

const FragmentResult* ResultStore::find(int fragment_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = results_.find(fragment_id);
    return it == results_.end() ? nullptr : &it->second;
}

std::map<int, double> ResultStore::expected_values() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::map<int, double> out;
    for (const auto& [id, r] : results_) out.emplace(id, r.expected_value);
    return out;
}

SimulatedBackend::SimulatedBackend(BackendModel model, std::uint64_t run_seed,
                                   const std::map<int, double>* pinned_expected_values)
    : model_(std::move(model)),
      latency_rng_(derive_stream_seed(run_seed, model_.identity + "/latency")),
      failure_rng_(derive_stream_seed(run_seed, model_.identity + "/failure")),
      value_rng_(derive_stream_seed(run_seed, model_.identity + "/expected-value")),
      pinned_expected_values_(pinned_expected_values) {
    model_.validate();
}

double SimulatedBackend::submit(const FragmentDescriptor& fragment, int slot, SimEngine& engine,
                                CompletionQueue& completions, ResultStore& store) {
    const double latency = model_.latency.sample(latency_rng_);

    CompletionEvent ev;
    ev.fragment_id = fragment.id;
    ev.backend_identity = model_.identity;
    ev.backend_class = model_.backend_class;
    ev.slot = slot;
    ev.time = engine.now() + latency;

    if (model_.failures.permanent_reject_ids.count(fragment.id) != 0) {
        ev.success = false;
        ev.reason = model_.failures.reject_reason;
    } else if (model_.failures.transient_rate > 0 &&
               failure_rng_.uniform01() < model_.failures.transient_rate) {
        ev.success = false;
        ev.reason = "injected transient failure";
    }

    std::optional<FragmentResult> result;
    if (ev.success) {
        FragmentResult r;
        r.fragment_id = fragment.id;
        if (pinned_expected_values_ != nullptr) {
            const auto it = pinned_expected_values_->find(fragment.id);
            r.expected_value =
                it != pinned_expected_values_->end() ? it->second : value_rng_.uniform(-1.0, 1.0);
        } else {
            r.expected_value = value_rng_.uniform(-1.0, 1.0);
        }
        r.shots = model_.shots;
        r.pauli_string = std::string(static_cast<std::size_t>(fragment.qubits), 'Z');
        r.backend_identity = model_.identity;
        r.phase_timings = {{"queue_s", 0.0}, {"exec_s", latency}};
        result = std::move(r);
    }

    engine.schedule(ev.time, [ev, result = std::move(result), &completions, &store]() {
        if (result) store.deposit(*result);
        completions.push(ev);
    });
    return latency;
}

nlohmann::ordered_json result_document(const FragmentResult& r) {
    nlohmann::ordered_json j;
    j["schema"] = "qcore.result.v1";
    j["fragment_id"] = r.fragment_id;
    j["expected_value"] = r.expected_value;
    j["shots"] = r.shots;
    j["pauli_string"] = r.pauli_string;
    j["backend"] = r.backend_identity;
    nlohmann::ordered_json timings;
    for (const auto& [k, v] : r.phase_timings) timings[k] = v;
    j["timings"] = timings;
    return j;
}

FragmentResult parse_result_document(const nlohmann::json& doc) {
    try {
        if (doc.at("schema").get<std::string>() != "qcore.result.v1")
            throw ConfigError("unsupported result schema");
        FragmentResult r;
        r.fragment_id = doc.at("fragment_id").get<int>();
        r.expected_value = doc.at("expected_value").get<double>();
        r.shots = doc.at("shots").get<int>();
        r.pauli_string = doc.at("pauli_string").get<std::string>();
        r.backend_identity = doc.at("backend").get<std::string>();
        for (const auto& [k, v] : doc.at("timings").items())
            r.phase_timings[k] = v.get<double>();
        r.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed result document: ") + e.what());
    }
}

}  // namespace dqr
