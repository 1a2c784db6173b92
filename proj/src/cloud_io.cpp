#include "vafs/cloud_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace vafs {

namespace {

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, r.ptr};
}

}  // namespace

SegmentedPointCloud read_frame(const std::filesystem::path& path) {
  const auto doc = ply::read(path);
  const auto& t = doc.vertices;
  const std::size_t cx = t.require_column("x"), cy = t.require_column("y"), cz = t.require_column("z");
  const std::size_t cr = t.require_column("red"), cg = t.require_column("green"), cb = t.require_column("blue");
  const std::size_t cid = t.require_column("object_id");

  SegmentedPointCloud cloud;
  for (const auto& c : doc.header.comments) {
    if (starts_with(c, "timestep ")) cloud.timestep = std::stoull(c.substr(9));
  }
  const bool byte_colors = t.columns[cr].type == ply::Type::kUInt8;
  const double color_scale = byte_colors ? 1.0 / 255.0 : 1.0;
  cloud.points.reserve(t.rows);
  for (std::size_t r = 0; r < t.rows; ++r) {
    SegmentedPoint p;
    p.position = {t.at(r, cx), t.at(r, cy), t.at(r, cz)};
    p.color = {t.at(r, cr) * color_scale, t.at(r, cg) * color_scale, t.at(r, cb) * color_scale};
    const double id = t.at(r, cid);
    if (!(id >= 0.0) || id != std::floor(id) || id > 4294967295.0) {
      throw DataError(path.string() + ": record " + std::to_string(r) + ": object_id must be a uint32");
    }
    p.object_id = static_cast<ObjectId>(id);
    cloud.points.push_back(p);
  }
  require_valid(cloud, path.string());
  return cloud;
}

void write_frame(const SegmentedPointCloud& cloud, const std::filesystem::path& path, ply::Format format) {
  require_valid(cloud, "write_frame");
  const std::vector<ply::Column> cols = {
      {"x", ply::Type::kFloat32},   {"y", ply::Type::kFloat32},    {"z", ply::Type::kFloat32},
      {"red", ply::Type::kUInt8},   {"green", ply::Type::kUInt8},  {"blue", ply::Type::kUInt8},
      {"object_id", ply::Type::kUInt32},
  };
  ply::write(path, format, {"timestep " + std::to_string(cloud.timestep)}, cols, cloud.points.size(),
             [&](std::size_t r, std::size_t c) -> double {
               const auto& p = cloud.points[r];
               const Rgb8 rgb = to_rgb8(p.color);
               switch (c) {
                 case 0: return p.position.x;
                 case 1: return p.position.y;
                 case 2: return p.position.z;
                 case 3: return rgb.r;
                 case 4: return rgb.g;
                 case 5: return rgb.b;
                 default: return p.object_id;
               }
             });
}

ConceptCloudFile read_concept_cloud(const std::filesystem::path& path) {
  const auto doc = ply::read(path);
  ConceptCloudFile out;
  bool tagged = false;
  std::optional<std::size_t> dim;
  for (const auto& c : doc.header.comments) {
    std::istringstream is(c);
    std::string key;
    is >> key;
    if (key == "vafs_concept_cloud") {
      tagged = true;
    } else if (key == "feature_dim") {
      std::size_t n = 0;
      is >> n;
      dim = n;
    } else if (key == "voxel_size") {
      std::string v;
      is >> v;
      double d = 0.0;
      std::from_chars(v.data(), v.data() + v.size(), d);
      out.cloud.voxel_size = d;
    } else if (key == "label") {
      ObjectId id = 0;
      is >> id;
      std::string rest;
      std::getline(is, rest);
      try {
        out.labels[id] = nlohmann::json::parse(rest).get<std::string>();
      } catch (const nlohmann::json::exception&) {
        throw DataError(path.string() + ": malformed label comment '" + c + "'");
      }
    }
  }
  if (!tagged || !dim) throw DataError(path.string() + ": not a concept-cloud file (missing header comments)");
  out.cloud.feature_dim = *dim;

  const auto& t = doc.vertices;
  const std::size_t cx = t.require_column("x"), cy = t.require_column("y"), cz = t.require_column("z");
  const std::size_t cs = t.require_column("source_object"), cv = t.require_column("source_valid");
  std::vector<std::size_t> fcols(*dim);
  for (std::size_t i = 0; i < *dim; ++i) fcols[i] = t.require_column("f" + std::to_string(i));

  out.cloud.points.reserve(t.rows);
  for (std::size_t r = 0; r < t.rows; ++r) {
    ConceptPoint p;
    p.position = {t.at(r, cx), t.at(r, cy), t.at(r, cz)};
    if (t.at(r, cv) != 0.0) p.source_object = static_cast<ObjectId>(t.at(r, cs));
    std::vector<double> f(*dim);
    for (std::size_t i = 0; i < *dim; ++i) f[i] = t.at(r, fcols[i]);
    p.feature = FeatureVector(std::move(f));
    out.cloud.points.push_back(std::move(p));
  }
  return out;
}

void write_concept_cloud(const ConceptCloud& cloud, const LabelMap& labels, const std::filesystem::path& path) {
  std::vector<std::string> comments = {"vafs_concept_cloud", "feature_dim " + std::to_string(cloud.feature_dim)};
  if (cloud.voxel_size) comments.push_back("voxel_size " + shortest(*cloud.voxel_size));
  for (const auto& [id, label] : labels) comments.push_back("label " + std::to_string(id) + " " + nlohmann::json(label).dump());

  std::vector<ply::Column> cols = {{"x", ply::Type::kFloat64},
                                   {"y", ply::Type::kFloat64},
                                   {"z", ply::Type::kFloat64},
                                   {"source_object", ply::Type::kUInt32},
                                   {"source_valid", ply::Type::kUInt8}};
  for (std::size_t i = 0; i < cloud.feature_dim; ++i) cols.push_back({"f" + std::to_string(i), ply::Type::kFloat64});
  for (const auto& p : cloud.points) {
    if (p.feature.dim() != cloud.feature_dim) throw DataError("write_concept_cloud: feature dimension mismatch");
  }
  ply::write(path, ply::Format::kBinaryLittleEndian, comments, cols, cloud.points.size(),
             [&](std::size_t r, std::size_t c) -> double {
               const auto& p = cloud.points[r];
               switch (c) {
                 case 0: return p.position.x;
                 case 1: return p.position.y;
                 case 2: return p.position.z;
                 case 3: return p.source_object.value_or(0);
                 case 4: return p.source_object ? 1.0 : 0.0;
                 default: return p.feature[c - 5];
               }
             });
}

}  // namespace vafs
