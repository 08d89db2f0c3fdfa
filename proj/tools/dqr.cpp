// Command line front end: generate workloads, preview labels, run scenarios,
// compare finished traces.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dqr/errors.hpp"
#include "dqr/json_io.hpp"
#include "dqr/metrics.hpp"
#include "dqr/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDeadlock = 2;
constexpr int kExitIncomplete = 3;

struct GenOptions {
    dqr::WorkloadSpec spec;
    std::string out = "workload.json";
};

struct LabelOptions {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct RunOptions {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string format = "json";
    bool trace = false;
};

struct ReportOptions {
    std::vector<std::string> traces;
    std::string format = "table";
};

dqr::Scenario load_with_overrides(const std::string& path, std::optional<std::uint64_t> seed) {
    dqr::Scenario s = dqr::load_scenario(path);
    if (seed) {
        s.seed = *seed;
        s.workload.seed = *seed;
    }
    return s;
}

int cmd_gen(const GenOptions& opt) {
    const dqr::Workload w = dqr::generate(opt.spec);
    dqr::save_workload(opt.out, w);
    std::cout << "wrote " << opt.out << ": " << w.fragments.size() << " fragments, "
              << w.meta.n_terms << " terms\n";
    return kExitOk;
}

int cmd_label(const LabelOptions& opt) {
    const dqr::Scenario s = load_with_overrides(opt.scenario, opt.seed);
    const dqr::Workload w =
        s.workload_file ? dqr::load_workload(*s.workload_file) : dqr::generate(s.workload);
    long shortfall = 0;
    const std::vector<dqr::PlacementLabel> labels = s.labeling.apply(w.fragments, &shortfall);

    long n_qc = 0, n_hpc = 0, n_und = 0;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        switch (labels[i]) {
            case dqr::PlacementLabel::QC: ++n_qc; break;
            case dqr::PlacementLabel::HPC: ++n_hpc; break;
            case dqr::PlacementLabel::Undecided: ++n_und; break;
        }
        rows.push_back({{"id", w.fragments[i].id}, {"label", dqr::to_string(labels[i])}});
    }
    const nlohmann::ordered_json doc{
        {"scenario", s.name},
        {"mode", dqr::to_string(s.labeling.mode)},
        {"counts", {{"QC", n_qc}, {"HPC", n_hpc}, {"Undecided", n_und}}},
        {"qc_shortfall", shortfall},
        {"labels", rows},
    };
    if (opt.out.empty()) {
        std::cout << doc.dump(2) << '\n';
    } else {
        std::ofstream out(opt.out);
        if (!out) throw dqr::ConfigError("cannot write " + opt.out);
        out << doc.dump(2) << '\n';
        std::cout << "wrote " << opt.out << ": QC " << n_qc << ", HPC " << n_hpc << ", Undecided "
                  << n_und << '\n';
    }
    if (shortfall > 0) {
        std::cerr << "warning: QC quota short by " << shortfall
                  << " fragment(s); spilled to the other classes\n";
    }
    return kExitOk;
}

void write_gantt(const fs::path& path, const dqr::Trace& trace) {
    std::ofstream out(path);
    if (!out) throw dqr::ConfigError("cannot write " + path.string());
    out << "fragment,backend,start,end\n";
    out.precision(17);
    std::map<int, dqr::TraceEvent> open;
    for (const dqr::TraceEvent& ev : trace.events()) {
        if (ev.event == dqr::trace_event::dispatch) {
            open[ev.fragment_id] = ev;
        } else if (ev.event == dqr::trace_event::done ||
                   ev.event == dqr::trace_event::transient_fail ||
                   ev.event == dqr::trace_event::permanent_fail) {
            const auto it = open.find(ev.fragment_id);
            if (it == open.end()) continue;
            out << ev.fragment_id << ',' << it->second.backend << ',' << it->second.t_virtual_s
                << ',' << ev.t_virtual_s << '\n';
            open.erase(it);
        }
    }
}

int cmd_run(const RunOptions& opt) {
    if (opt.format != "json" && opt.format != "csv") {
        throw dqr::ConfigError("--format must be json or csv");
    }
    const dqr::Scenario s = load_with_overrides(opt.scenario, opt.seed);
    const dqr::ScenarioRun run = dqr::run_scenario(s);

    const fs::path out_dir(opt.out_dir);
    fs::create_directories(out_dir);

    if (opt.trace) {
        std::ofstream out(out_dir / "trace.jsonl");
        if (!out) throw dqr::ConfigError("cannot write trace.jsonl");
        run.outcome.trace.write_jsonl(out);
    }

    if (run.outcome.status == dqr::RunStatus::Deadlock) {
        std::cerr << "deadlock: " << run.outcome.succeeded << " succeeded, "
                  << run.outcome.permanent_failed << " permanently failed, work left pending after "
                  << run.outcome.waves << " waves\n";
        return kExitDeadlock;
    }

    write_gantt(out_dir / "gantt.csv", run.outcome.trace);

    const fs::path results_dir = out_dir / "results";
    fs::create_directories(results_dir);
    for (const auto& [id, result] : run.outcome.results) {
        std::ostringstream name;
        name << "fragment-" << std::setw(5) << std::setfill('0') << id << ".json";
        std::ofstream out(results_dir / name.str());
        if (!out) throw dqr::ConfigError("cannot write result for fragment " + std::to_string(id));
        out << dqr::result_document(result).dump(2) << '\n';
    }

    if (run.metrics) {
        if (opt.format == "json") {
            std::ofstream out(out_dir / "metrics.json");
            out << dqr::to_json(*run.metrics).dump(2) << '\n';
        } else {
            std::ofstream out(out_dir / "metrics.csv");
            out << dqr::metrics_csv_header() << '\n' << dqr::metrics_csv_row(*run.metrics) << '\n';
        }
        const dqr::RunMetrics& m = *run.metrics;
        std::cout << "scenario " << (m.scenario.empty() ? s.name : m.scenario) << ": " << m.waves
                  << " waves, " << m.succeeded << "/" << m.n_fragments << " fragments\n"
                  << "  stream times: QC " << m.t_qc_s << " s (n_qc " << m.n_qc << "), HPC "
                  << m.t_hpc_s << " s, phi " << m.phi << " (" << m.classification << ")\n"
                  << "  makespan " << m.makespan_s << " s";
        if (m.speedup) std::cout << ", speedup " << *m.speedup;
        std::cout << '\n';
    }
    if (run.reconstructed) {
        std::cout << "  reconstructed observable: " << *run.reconstructed << '\n';
    }

    if (run.outcome.permanent_failed > 0) {
        std::cerr << run.outcome.permanent_failed
                  << " fragment(s) permanently failed; observable not reconstructable\n";
        return kExitIncomplete;
    }
    return kExitOk;
}

int cmd_report(const ReportOptions& opt) {
    if (opt.format != "table" && opt.format != "csv") {
        throw dqr::ConfigError("--format must be table or csv");
    }
    std::vector<dqr::RunMetrics> rows;
    for (const std::string& path : opt.traces) {
        std::ifstream in(path);
        if (!in) throw dqr::ConfigError("cannot open trace " + path);
        const dqr::Trace trace = dqr::Trace::from_jsonl(in);
        dqr::RunConstants constants = dqr::constants_from_trace(trace);
        if (constants.scenario.empty()) constants.scenario = fs::path(path).stem().string();
        rows.push_back(dqr::compute(trace, constants));
    }

    if (opt.format == "csv") {
        std::cout << dqr::metrics_csv_header() << '\n';
        for (const dqr::RunMetrics& m : rows) std::cout << dqr::metrics_csv_row(m) << '\n';
        return kExitOk;
    }

    const auto num = [](double v) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(2) << v;
        return s.str();
    };
    std::vector<std::array<std::string, 10>> cells;
    cells.push_back({"scenario", "waves", "n_qc", "t_qc_s", "t_hpc_s", "phi", "sigma", "class",
                     "makespan_s", "speedup"});
    for (const dqr::RunMetrics& m : rows) {
        cells.push_back({m.scenario, std::to_string(m.waves), std::to_string(m.n_qc), num(m.t_qc_s),
                         num(m.t_hpc_s), num(m.phi), num(m.sigma), m.classification,
                         num(m.makespan_s), m.speedup ? num(*m.speedup) : std::string{"-"}});
    }
    std::array<std::size_t, 10> width{};
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::cout << std::left << std::setw(static_cast<int>(width[c]) + 2) << row[c];
        }
        std::cout << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wave-based fragment dispatch across classical and quantum backends"};
    app.require_subcommand(1);

    GenOptions gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic cut workload");
    gen_cmd->add_option("--qubits", gen.spec.n_qubits, "parent circuit width");
    gen_cmd->add_option("--layers", gen.spec.n_layers, "ansatz layers");
    gen_cmd->add_option("--cuts", gen.spec.cuts, "gate cuts (terms scale as 6^cuts)");
    gen_cmd->add_option("--components", gen.spec.components, "fragments per term");
    gen_cmd->add_option("--seed", gen.spec.seed, "generator seed");
    gen_cmd->add_option("--jitter", gen.spec.metric_jitter, "relative metric jitter in [0,1)");
    gen_cmd->add_option("--out", gen.out, "output file (default workload.json)");

    LabelOptions label;
    CLI::App* label_cmd = app.add_subcommand("label", "preview placement labels for a scenario");
    label_cmd->add_option("--scenario", label.scenario, "scenario file")->required();
    std::uint64_t label_seed = 0;
    CLI::Option* label_seed_opt =
        label_cmd->add_option("--seed", label_seed, "override the scenario seed");
    label_cmd->add_option("--out", label.out, "write labels JSON here instead of stdout");

    RunOptions run;
    CLI::App* run_cmd = app.add_subcommand("run", "run a scenario to completion");
    run_cmd->add_option("--scenario", run.scenario, "scenario file")->required();
    std::uint64_t run_seed = 0;
    CLI::Option* run_seed_opt =
        run_cmd->add_option("--seed", run_seed, "override the scenario seed");
    run_cmd->add_option("--out-dir", run.out_dir, "output directory (default .)");
    run_cmd->add_option("--format", run.format, "metrics format: json or csv");
    run_cmd->add_flag("--trace", run.trace, "also write trace.jsonl");

    ReportOptions report;
    CLI::App* report_cmd = app.add_subcommand("report", "summarize finished traces side by side");
    report_cmd->add_option("traces", report.traces, "trace.jsonl files")->required();
    report_cmd->add_option("--format", report.format, "output format: table or csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) return cmd_gen(gen);
        if (label_cmd->parsed()) {
            if (*label_seed_opt) label.seed = label_seed;
            return cmd_label(label);
        }
        if (run_cmd->parsed()) {
            if (*run_seed_opt) run.seed = run_seed;
            return cmd_run(run);
        }
        if (report_cmd->parsed()) return cmd_report(report);
    } catch (const dqr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
