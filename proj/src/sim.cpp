#include "dqr/sim.hpp"

#include <ostream>
#include <sstream>

namespace dqr {

std::optional<double> SimEngine::next_time() const {
    if (events_.empty()) return std::nullopt;
    return events_.begin()->time;
}

std::uint64_t SimEngine::schedule(double time, std::function<void()> action) {
    if (time < now_)
        throw TimeTravelError("schedule at t=" + std::to_string(time) +
                              " before current clock t=" + std::to_string(now_));
    const std::uint64_t seq = next_sequence_++;
    events_.insert(SimEvent{time, seq, std::move(action)});
    return seq;
}

SimEvent SimEngine::advance() {
    if (events_.empty()) throw QueueEmptyError("advance on empty event queue");
    auto node = events_.extract(events_.begin());
    now_ = node.value().time;
    return std::move(node.value());
}

void Trace::append(TraceEvent e) {
    if (!events_.empty() && e.t_virtual_s < events_.back().t_virtual_s)
        throw TimeTravelError("trace timestamp regression");
    events_.push_back(std::move(e));
}

std::string Trace::to_jsonl() const {
    std::ostringstream os;
    write_jsonl(os);
    return os.str();
}

void Trace::write_jsonl(std::ostream& os) const {
    for (const auto& e : events_) {
        nlohmann::ordered_json j;
        j["t_virtual_s"] = e.t_virtual_s;
        j["wave"] = e.wave;
        j["fragment_id"] = e.fragment_id;
        j["event"] = e.event;
        j["backend"] = e.backend;
        j["detail"] = e.detail;
        os << j.dump() << '\n';
    }
}

Trace Trace::from_jsonl(std::istream& is) {
    Trace t;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::ordered_json::parse(line);
        TraceEvent e;
        e.t_virtual_s = j.at("t_virtual_s").get<double>();
        e.wave = j.at("wave").get<int>();
        e.fragment_id = j.at("fragment_id").get<int>();
        e.event = j.at("event").get<std::string>();
        e.backend = j.at("backend").get<std::string>();
        e.detail = j.at("detail");
        t.append(std::move(e));
    }
    return t;
}

}  // namespace dqr
