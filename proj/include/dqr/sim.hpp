#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dqr/errors.hpp"
#include <nlohmann/json.hpp>

namespace dqr {

// One scheduled occurrence. `sequence` is the insertion ordinal and breaks
// ties between events at the same virtual time, so dequeue order is total and
// reproducible.
struct SimEvent {
    double time = 0.0;
    std::uint64_t sequence = 0;
    std::function<void()> action;
};

// Minimal discrete-event core: a virtual clock in float seconds plus an
// ordered pending set. The clock only moves inside advance().
class SimEngine {
public:
    double now() const { return now_; }
    bool empty() const { return events_.empty(); }
    std::size_t size() const { return events_.size(); }

    // Time of the earliest pending event, if any.
    std::optional<double> next_time() const;

    // Throws TimeTravelError when `time` is before the current clock.
    std::uint64_t schedule(double time, std::function<void()> action);

    // Pops the earliest event, moves the clock to its time and returns it;
    // the caller decides whether to run the action. Throws QueueEmptyError.
    SimEvent advance();

private:
    struct Earlier {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.time != b.time) return a.time < b.time;
            return a.sequence < b.sequence;
        }
    };
    double now_ = 0.0;
    std::uint64_t next_sequence_ = 0;
    std::set<SimEvent, Earlier> events_;
};

// Trace event names; shared between the coordinator, metrics and tests.
namespace trace_event {
inline constexpr const char* run_config = "run_config";
inline constexpr const char* dispatch = "dispatch";
inline constexpr const char* done = "done";
inline constexpr const char* transient_fail = "transient_fail";
inline constexpr const char* permanent_fail = "permanent_fail";
inline constexpr const char* relabel = "relabel";
inline constexpr const char* wave_commit = "wave_commit";
inline constexpr const char* deadlock = "deadlock";
inline constexpr const char* run_complete = "run_complete";
}  // namespace trace_event

struct TraceEvent {
    double t_virtual_s = 0.0;
    int wave = 0;
    int fragment_id = -1;  // -1 for run-level events
    std::string event;
    std::string backend;                    // empty when not backend-related
    nlohmann::ordered_json detail = "";     // string or structured payload
};

// Append-only record of a run. Timestamps must be non-decreasing; serialized
// form is one JSON object per line with a fixed key order, which is what makes
// identical runs byte-comparable.
class Trace {
public:
    void append(TraceEvent e);  // throws Error on a timestamp regression
    const std::vector<TraceEvent>& events() const { return events_; }
    bool empty() const { return events_.empty(); }

    std::string to_jsonl() const;
    void write_jsonl(std::ostream& os) const;
    static Trace from_jsonl(std::istream& is);

private:
    std::vector<TraceEvent> events_;
};

}  // namespace dqr
