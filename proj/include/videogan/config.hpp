#pragma once

#include <filesystem>

#include "json.hpp"
#include "videogan/trainer.hpp"

namespace videogan {

nlohmann::json to_json(const RunConfig& config);
/// Overlays `patch` on `base`. Keys absent from the schema are rejected.
RunConfig apply_config_patch(const RunConfig& base, const nlohmann::json& patch);
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base = {});

}  // namespace videogan
