#include "vafs/config.hpp"

#include <fstream>

namespace vafs {

namespace {

template <typename T>
T get_as(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("invalid config: " + key + " has the wrong type");
  }
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& doc, RunConfig base) {
  if (!doc.is_object()) throw DataError("invalid config: expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "voxel_size") {
      base.voxel_size = get_as<double>(value, key);
    } else if (key == "voxel_increment") {
      base.voxel_increment = get_as<double>(value, key);
    } else if (key == "knn_k") {
      base.knn_k = get_as<int>(value, key);
    } else if (key == "outlier_std_mult") {
      base.outlier_std_mult = get_as<double>(value, key);
    } else if (key == "fov_deg") {
      base.fov_deg = get_as<double>(value, key);
    } else if (key == "frame_margin") {
      base.frame_margin = get_as<double>(value, key);
    } else if (key == "render_resolution") {
      if (value.is_number_integer()) {
        base.render_resolution = {value.get<int>(), value.get<int>()};
      } else {
        auto wh = get_as<std::vector<int>>(value, key);
        if (wh.size() != 2) throw DataError("invalid config: render_resolution must be [width, height]");
        base.render_resolution = {wh[0], wh[1]};
      }
    } else if (key == "splat_radius_px") {
      base.splat_radius_px = get_as<int>(value, key);
    } else if (key == "change_epsilon") {
      base.change_epsilon = get_as<double>(value, key);
    } else if (key == "relevancy_threshold") {
      base.relevancy_threshold = get_as<double>(value, key);
    } else {
      throw DataError("invalid config: unknown key '" + key + "'");
    }
  }
  base.validate();
  return base;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  return {
      {"voxel_size", c.voxel_size},
      {"voxel_increment", c.voxel_increment},
      {"knn_k", c.knn_k},
      {"outlier_std_mult", c.outlier_std_mult},
      {"fov_deg", c.fov_deg},
      {"frame_margin", c.frame_margin},
      {"render_resolution", {c.render_resolution.width, c.render_resolution.height}},
      {"splat_radius_px", c.splat_radius_px},
      {"change_epsilon", c.change_epsilon},
      {"relevancy_threshold", c.relevancy_threshold},
  };
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("config file " + path.string() + ": " + e.what());
  }
  return run_config_from_json(doc, base);
}

}  // namespace vafs
