#pragma once

#include <optional>
#include <string>

#include "dqr/sim.hpp"

namespace dqr {

// Scenario-level constants that the trace alone cannot define. They ride in
// the run_config event so a trace file is self-describing.
struct RunConstants {
    std::string scenario;
    double t_setup_s = 0.0;       // upfront preparation charged to every strategy
    double makespan_cpu_s = 0.0;  // single-node reference wall time, 0 = unknown
    int qc_slots_total = 0;
    std::uint64_t seed = 0;
};

RunConstants constants_from_trace(const Trace& trace);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population form
    long n = 0;
};

struct RunMetrics {
    std::string scenario;
    std::string status;  // "complete" (metrics of partial runs are undefined)
    int waves = 0;
    long n_fragments = 0;
    long succeeded = 0;
    long permanent_failed = 0;

    double t_start_s = 0.0;   // first dispatch, relative to trace origin
    double t_qc_s = 0.0;      // last completion on QC minus t_start
    double t_hpc_s = 0.0;
    long n_qc = 0;            // fragments whose final successful run was on QC
    long n_hpc = 0;
    double dqr_time_s = 0.0;  // run_complete minus trace origin
    double c_fixed_s = 0.0;   // dqr_time minus the slower stream
    double t_setup_s = 0.0;
    double makespan_s = 0.0;  // t_setup + dqr_time
    double phi = 1.0;         // t_qc / t_hpc
    double sigma = 1.0;       // overlap factor in (1, 2]
    std::string classification;  // QC-bound / HPC-bound / balanced
    std::optional<double> speedup;  // makespan_cpu / makespan, when known

    MeanStd exec_qc_s;   // successful execution latencies per class
    MeanStd exec_hpc_s;
    int qc_slots_total = 0;
};

// Derives every metric from a finished trace. Throws IncompleteTraceError when
// the trace lacks run_config / run_complete or has a done event with no
// matching dispatch.
RunMetrics compute(const Trace& trace, const RunConstants& constants);

// Both algebraic forms of the overlap factor; they agree to rounding.
double sigma_sum_form(double t_qc, double t_hpc);
double sigma_min_form(double t_qc, double t_hpc);

// |phi - 1| <= tol is balanced, phi > 1 QC-bound, otherwise HPC-bound.
std::string classify(double phi, double tol = 1e-9);

struct SensitivityProjection {
    double t_qc_s = 0.0;
    double dqr_time_s = 0.0;
    double makespan_s = 0.0;
};

// What-if projection for a different QC latency: the QC stream is re-modeled
// as ceil(n_qc / slots) * exec_s, everything else held fixed.
SensitivityProjection project_sensitivity(const RunMetrics& m, int qc_slots, double exec_s);

nlohmann::ordered_json to_json(const RunMetrics& m);
std::string metrics_csv_header();
std::string metrics_csv_row(const RunMetrics& m);

}  // namespace dqr
