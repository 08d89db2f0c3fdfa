#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "dqr/workload.hpp"

namespace dqr {

nlohmann::ordered_json to_json(const FragmentDescriptor& f);
FragmentDescriptor descriptor_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const ReconstructionMeta& meta);
ReconstructionMeta meta_from_json(const nlohmann::json& j);

// One file carries the fragments and the table that stitches their expected
// values back together.
nlohmann::ordered_json to_json(const Workload& w);
Workload workload_from_json(const nlohmann::json& j);

Workload load_workload(const std::filesystem::path& path);
void save_workload(const std::filesystem::path& path, const Workload& w);

}  // namespace dqr
