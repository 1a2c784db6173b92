#pragma once

#include <filesystem>

#include <json.hpp>

#include "vafs/core.hpp"

namespace vafs {

/// Overlays the keys present in `doc` onto `base`. Unknown keys are a DataError.
RunConfig run_config_from_json(const nlohmann::json& doc, RunConfig base = {});
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace vafs
