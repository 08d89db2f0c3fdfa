#include "dqr/json_io.hpp"

#include <fstream>
#include <set>

#include "dqr/errors.hpp"

namespace dqr {

nlohmann::ordered_json to_json(const FragmentDescriptor& f) {
    nlohmann::ordered_json backends = nlohmann::ordered_json::array();
    for (const BackendClass c : f.admissible_backends) backends.push_back(to_string(c));
    return nlohmann::ordered_json{
        {"id", f.id},
        {"payload_ref", f.payload_ref},
        {"qubits", f.qubits},
        {"depth", f.depth},
        {"two_qubit_gates", f.two_qubit_gates},
        {"total_ops", f.total_ops},
        {"coefficient", f.coefficient},
        {"admissible_backends", backends},
        {"component_id", f.component_id},
    };
}

FragmentDescriptor descriptor_from_json(const nlohmann::json& j) {
    FragmentDescriptor f;
    try {
        f.id = j.at("id").get<int>();
        f.payload_ref = j.value("payload_ref", std::string{});
        f.qubits = j.value("qubits", 1L);
        f.depth = j.value("depth", 1L);
        f.two_qubit_gates = j.value("two_qubit_gates", 0L);
        f.total_ops = j.value("total_ops", 0L);
        f.coefficient = j.value("coefficient", 1.0);
        f.component_id = j.value("component_id", 0);
        if (j.contains("admissible_backends")) {
            f.admissible_backends.clear();
            for (const auto& name : j.at("admissible_backends")) {
                f.admissible_backends.insert(backend_class_from_string(name.get<std::string>()));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad fragment descriptor: ") + e.what());
    }
    f.validate();
    return f;
}

nlohmann::ordered_json to_json(const ReconstructionMeta& meta) {
    nlohmann::ordered_json terms = nlohmann::ordered_json::array();
    for (long t = 0; t < meta.n_terms; ++t) {
        terms.push_back(nlohmann::ordered_json{
            {"term", t},
            {"coefficient", meta.term_coefficients[static_cast<std::size_t>(t)]},
            {"fragment_ids", meta.term_fragments[static_cast<std::size_t>(t)]},
        });
    }
    return nlohmann::ordered_json{
        {"n_terms", meta.n_terms},
        {"n_components", meta.n_components},
        {"global_factor", meta.global_factor},
        {"terms", terms},
    };
}

ReconstructionMeta meta_from_json(const nlohmann::json& j) {
    ReconstructionMeta meta;
    try {
        meta.n_terms = j.at("n_terms").get<long>();
        meta.n_components = j.at("n_components").get<int>();
        meta.global_factor = j.at("global_factor").get<double>();
        for (const auto& term : j.at("terms")) {
            meta.term_coefficients.push_back(term.at("coefficient").get<double>());
            meta.term_fragments.push_back(term.at("fragment_ids").get<std::vector<int>>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad reconstruction metadata: ") + e.what());
    }
    meta.validate();
    return meta;
}

nlohmann::ordered_json to_json(const Workload& w) {
    nlohmann::ordered_json fragments = nlohmann::ordered_json::array();
    for (const FragmentDescriptor& f : w.fragments) fragments.push_back(to_json(f));
    return nlohmann::ordered_json{{"fragments", fragments}, {"reconstruction", to_json(w.meta)}};
}

Workload workload_from_json(const nlohmann::json& j) {
    Workload w;
    try {
        for (const auto& f : j.at("fragments")) w.fragments.push_back(descriptor_from_json(f));
        w.meta = meta_from_json(j.at("reconstruction"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad workload file: ") + e.what());
    }
    // Cross-check: descriptor ids are unique and every term reference resolves.
    // Both would otherwise only blow up mid-run (dispatch or reconstruction).
    std::set<int> ids;
    for (const FragmentDescriptor& f : w.fragments) {
        if (!ids.insert(f.id).second) {
            throw ConfigError("workload has duplicate fragment id " + std::to_string(f.id));
        }
    }
    for (const auto& term : w.meta.term_fragments) {
        for (const int id : term) {
            if (ids.count(id) == 0) {
                throw ConfigError("reconstruction references unknown fragment id " +
                                  std::to_string(id));
            }
        }
    }
    return w;
}

Workload load_workload(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open workload file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return workload_from_json(j);
}

void save_workload(const std::filesystem::path& path, const Workload& w) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write workload file " + path.string());
    out << to_json(w).dump(2) << '\n';
}

}  // namespace dqr
