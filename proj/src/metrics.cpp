#include "dqr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "dqr/errors.hpp"
#include "dqr/fragment.hpp"

namespace dqr {

RunConstants constants_from_trace(const Trace& trace) {
    for (const TraceEvent& ev : trace.events()) {
        if (ev.event != trace_event::run_config) continue;
        RunConstants c;
        if (ev.detail.is_object()) {
            c.scenario = ev.detail.value("scenario", std::string{});
            c.t_setup_s = ev.detail.value("t_setup_s", 0.0);
            c.makespan_cpu_s = ev.detail.value("makespan_cpu_s", 0.0);
            c.qc_slots_total = ev.detail.value("qc_slots_total", 0);
            c.seed = ev.detail.value("seed", std::uint64_t{0});
        }
        return c;
    }
    throw IncompleteTraceError("trace has no run_config event");
}

double sigma_sum_form(double t_qc, double t_hpc) {
    const double slower = std::max(t_qc, t_hpc);
    if (slower <= 0.0) return 1.0;  // degenerate: nothing ran
    return (t_qc + t_hpc) / slower;
}

double sigma_min_form(double t_qc, double t_hpc) {
    const double slower = std::max(t_qc, t_hpc);
    if (slower <= 0.0) return 1.0;
    return 1.0 + std::min(t_qc, t_hpc) / slower;
}

std::string classify(double phi, double tol) {
    if (std::isfinite(phi) && std::abs(phi - 1.0) <= tol) return "balanced";
    return phi > 1.0 ? "QC-bound" : "HPC-bound";
}

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    out.n = static_cast<long>(xs.size());
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

}  // namespace

RunMetrics compute(const Trace& trace, const RunConstants& constants) {
    const auto& events = trace.events();
    if (events.empty()) throw IncompleteTraceError("empty trace");
    if (events.front().event != trace_event::run_config) {
        throw IncompleteTraceError("trace does not start with run_config");
    }
    const double origin = events.front().t_virtual_s;

    RunMetrics m;
    m.scenario = constants.scenario;
    m.t_setup_s = constants.t_setup_s;
    m.qc_slots_total = constants.qc_slots_total;
    if (events.front().detail.is_object()) {
        m.n_fragments = events.front().detail.value("n_fragments", 0L);
    }

    // Backend identity -> class, as recorded at run start.
    std::map<std::string, BackendClass> classes;
    if (events.front().detail.is_object() && events.front().detail.contains("backend_classes")) {
        for (const auto& [identity, name] : events.front().detail.at("backend_classes").items()) {
            classes[identity] = backend_class_from_string(name.get<std::string>());
        }
    }
    const auto class_of = [&](const TraceEvent& ev) {
        const auto it = classes.find(ev.backend);
        if (it == classes.end()) {
            throw IncompleteTraceError("event references backend '" + ev.backend +
                                       "' missing from run_config");
        }
        return it->second;
    };

    std::optional<double> first_dispatch;
    std::map<int, TraceEvent> open_dispatch;  // fragment id -> latest dispatch
    std::vector<double> exec_qc;
    std::vector<double> exec_hpc;
    double last_done_qc = -1.0;
    double last_done_hpc = -1.0;
    std::optional<double> completed_at;

    for (const TraceEvent& ev : events) {
        if (ev.event == trace_event::dispatch) {
            if (!first_dispatch) first_dispatch = ev.t_virtual_s;
            open_dispatch[ev.fragment_id] = ev;
        } else if (ev.event == trace_event::done) {
            const auto it = open_dispatch.find(ev.fragment_id);
            if (it == open_dispatch.end()) {
                throw IncompleteTraceError("done without dispatch for fragment " +
                                           std::to_string(ev.fragment_id));
            }
            const double exec = ev.t_virtual_s - it->second.t_virtual_s;
            if (class_of(ev) == BackendClass::QC) {
                ++m.n_qc;
                exec_qc.push_back(exec);
                last_done_qc = std::max(last_done_qc, ev.t_virtual_s);
            } else {
                ++m.n_hpc;
                exec_hpc.push_back(exec);
                last_done_hpc = std::max(last_done_hpc, ev.t_virtual_s);
            }
            ++m.succeeded;
            open_dispatch.erase(it);
        } else if (ev.event == trace_event::transient_fail) {
            open_dispatch.erase(ev.fragment_id);
        } else if (ev.event == trace_event::permanent_fail) {
            open_dispatch.erase(ev.fragment_id);
            ++m.permanent_failed;
        } else if (ev.event == trace_event::wave_commit) {
            m.waves = ev.wave + 1;
        } else if (ev.event == trace_event::run_complete) {
            completed_at = ev.t_virtual_s;
            m.status = "complete";
        }
    }
    if (!completed_at) throw IncompleteTraceError("trace has no run_complete event");
    if (!open_dispatch.empty()) {
        throw IncompleteTraceError("run_complete with " + std::to_string(open_dispatch.size()) +
                                   " executions still open");
    }

    m.t_start_s = (first_dispatch ? *first_dispatch : origin) - origin;
    const double start_abs = first_dispatch ? *first_dispatch : origin;
    m.t_qc_s = last_done_qc >= 0.0 ? last_done_qc - start_abs : 0.0;
    m.t_hpc_s = last_done_hpc >= 0.0 ? last_done_hpc - start_abs : 0.0;
    m.dqr_time_s = *completed_at - origin;
    m.c_fixed_s = m.dqr_time_s - std::max(m.t_qc_s, m.t_hpc_s);
    if (m.c_fixed_s < 0.0 && m.c_fixed_s > -1e-9) m.c_fixed_s = 0.0;
    m.makespan_s = m.t_setup_s + m.dqr_time_s;

    if (m.t_hpc_s > 0.0) {
        m.phi = m.t_qc_s / m.t_hpc_s;
    } else {
        m.phi = m.t_qc_s > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    m.sigma = sigma_sum_form(m.t_qc_s, m.t_hpc_s);
    m.classification = classify(m.phi);
    if (constants.makespan_cpu_s > 0.0 && m.makespan_s > 0.0) {
        m.speedup = constants.makespan_cpu_s / m.makespan_s;
    }
    m.exec_qc_s = mean_std(exec_qc);
    m.exec_hpc_s = mean_std(exec_hpc);
    return m;
}

SensitivityProjection project_sensitivity(const RunMetrics& m, int qc_slots, double exec_s) {
    if (qc_slots < 1) throw ConfigError("sensitivity projection needs at least one QC slot");
    if (exec_s <= 0.0) throw ConfigError("sensitivity projection needs a positive execution time");
    SensitivityProjection p;
    const double rounds = std::ceil(static_cast<double>(m.n_qc) / static_cast<double>(qc_slots));
    p.t_qc_s = rounds * exec_s;
    p.dqr_time_s = std::max(p.t_qc_s, m.t_hpc_s) + m.c_fixed_s;
    p.makespan_s = m.t_setup_s + p.dqr_time_s;
    return p;
}

nlohmann::ordered_json to_json(const RunMetrics& m) {
    nlohmann::ordered_json j{
        {"scenario", m.scenario},
        {"status", m.status},
        {"waves", m.waves},
        {"n_fragments", m.n_fragments},
        {"succeeded", m.succeeded},
        {"permanent_failed", m.permanent_failed},
        {"t_start_s", m.t_start_s},
        {"t_qc_s", m.t_qc_s},
        {"t_hpc_s", m.t_hpc_s},
        {"n_qc", m.n_qc},
        {"n_hpc", m.n_hpc},
        {"dqr_time_s", m.dqr_time_s},
        {"c_fixed_s", m.c_fixed_s},
        {"t_setup_s", m.t_setup_s},
        {"makespan_s", m.makespan_s},
        {"phi", m.phi},
        {"sigma", m.sigma},
        {"classification", m.classification},
        {"qc_slots_total", m.qc_slots_total},
        {"exec_qc_s", {{"mean", m.exec_qc_s.mean}, {"stddev", m.exec_qc_s.stddev}, {"n", m.exec_qc_s.n}}},
        {"exec_hpc_s",
         {{"mean", m.exec_hpc_s.mean}, {"stddev", m.exec_hpc_s.stddev}, {"n", m.exec_hpc_s.n}}},
    };
    if (m.speedup) {
        j["speedup"] = *m.speedup;
    } else {
        j["speedup"] = nullptr;
    }
    return j;
}

std::string metrics_csv_header() {
    return "scenario,status,waves,n_fragments,succeeded,permanent_failed,t_start_s,t_qc_s,"
           "t_hpc_s,n_qc,n_hpc,dqr_time_s,c_fixed_s,t_setup_s,makespan_s,phi,sigma,"
           "classification,speedup,exec_qc_mean_s,exec_qc_std_s,exec_hpc_mean_s,exec_hpc_std_s";
}

std::string metrics_csv_row(const RunMetrics& m) {
    std::ostringstream out;
    out.precision(17);
    out << m.scenario << ',' << m.status << ',' << m.waves << ',' << m.n_fragments << ','
        << m.succeeded << ',' << m.permanent_failed << ',' << m.t_start_s << ',' << m.t_qc_s << ','
        << m.t_hpc_s << ',' << m.n_qc << ',' << m.n_hpc << ',' << m.dqr_time_s << ','
        << m.c_fixed_s << ',' << m.t_setup_s << ',' << m.makespan_s << ',' << m.phi << ','
        << m.sigma << ',' << m.classification << ',';
    if (m.speedup) out << *m.speedup;
    out << ',' << m.exec_qc_s.mean << ',' << m.exec_qc_s.stddev << ',' << m.exec_hpc_s.mean << ','
        << m.exec_hpc_s.stddev;
    return out.str();
}

}  // namespace dqr
