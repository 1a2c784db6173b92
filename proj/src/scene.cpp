#include "vafs/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <Eigen/Geometry>

#include "vafs/raster.hpp"
#include "vafs/rng.hpp"
#include "vafs/view_synthesis.hpp"

namespace vafs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec3_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }
json vec3_json(const Eigen::Vector3d& p) { return json::array({p.x(), p.y(), p.z()}); }

Point3 parse_point(const json& j, const std::string& what) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return {v, v, v};
  }
  if (!j.is_array() || j.size() != 3) throw DataError(what + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
}

}  // namespace

// --- manifest ---------------------------------------------------------------

SceneManifest read_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("manifest not found: " + path.string());
  const json doc = read_json(path);
  SceneManifest m;
  try {
    for (const auto& f : doc.at("frames")) {
      fs::path p = f.get<std::string>();
      m.frames.push_back(p.is_absolute() ? p : path.parent_path() / p);
    }
    if (doc.contains("labels")) {
      std::set<std::string> seen;
      for (const auto& [key, value] : doc.at("labels").items()) {
        const auto id = static_cast<ObjectId>(std::stoul(key));
        const auto label = value.get<std::string>();
        if (!seen.insert(label).second) throw DataError("manifest " + path.string() + ": duplicate label '" + label + "'");
        m.labels[id] = label;
      }
    }
    if (doc.contains("cameras")) {
      for (const auto& c : doc.at("cameras")) {
        CameraPose cam;
        cam.position = parse_point(c.at("position"), "camera position");
        cam.look_at = parse_point(c.at("look_at"), "camera look_at");
        if (c.contains("up")) cam.up = parse_point(c.at("up"), "camera up").vec();
        cam.fov_deg = field(c, "fov_deg", 60.0);
        if (c.contains("resolution")) cam.resolution = {c.at("resolution")[0].get<int>(), c.at("resolution")[1].get<int>()};
        cam.validate();
        m.cameras.push_back(cam);
      }
    }
  } catch (const json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw DataError("manifest " + path.string() + ": label keys must be object ids");
  }
  if (m.frames.empty()) throw DataError("manifest " + path.string() + " lists no frames");
  return m;
}

void write_manifest(const SceneManifest& m, const fs::path& path) {
  json doc;
  doc["frames"] = json::array();
  for (const auto& f : m.frames) {
    // relative to the manifest when it lives alongside the frames
    const auto rel = f.lexically_relative(path.parent_path());
    doc["frames"].push_back((rel.empty() || *rel.begin() == "..") ? f.string() : rel.string());
  }
  doc["labels"] = json::object();
  for (const auto& [id, label] : m.labels) doc["labels"][std::to_string(id)] = label;
  if (!m.cameras.empty()) {
    doc["cameras"] = json::array();
    for (const auto& c : m.cameras) {
      doc["cameras"].push_back({{"position", vec3_json(c.position)},
                                {"look_at", vec3_json(c.look_at)},
                                {"up", vec3_json(c.up)},
                                {"fov_deg", c.fov_deg},
                                {"resolution", {c.resolution.width, c.resolution.height}}});
    }
  }
  write_json(doc, path);
}

// --- scene spec -------------------------------------------------------------

void SceneSpec::validate() const {
  if (points_per_object < 8) throw DataError("scene spec: points_per_object must be >= 8");
  if (timesteps < 1) throw DataError("scene spec: timesteps must be >= 1");
  if (!(noise_std >= 0.0)) throw DataError("scene spec: noise_std must be >= 0");
  std::set<ObjectId> ids;
  std::set<std::string> names;
  for (const auto& o : objects) {
    const std::string who = "scene spec: object " + std::to_string(o.id);
    if (!ids.insert(o.id).second) throw DataError(who + " appears twice");
    if (!names.insert(o.label).second) throw DataError(who + ": duplicate label '" + o.label + "'");
    const bool ok = o.shape == Primitive::kBox      ? (o.size.x > 0 && o.size.y > 0 && o.size.z > 0)
                    : o.shape == Primitive::kSphere ? o.size.x > 0
                                                    : (o.size.x > 0 && o.size.z > 0);
    if (!ok) throw DataError(who + ": sizes must be > 0");
    if (!o.center.finite()) throw DataError(who + ": center must be finite");
    if (!o.color.in_range()) throw DataError(who + ": color channels must lie in [0,1]");
  }
  if (ground_plane) {
    if (objects.empty()) throw DataError("scene spec: ground plane needs at least one object");
    if (ids.count(ground_id)) throw DataError("scene spec: ground_id collides with an object id");
    if (names.count(ground_label)) throw DataError("scene spec: ground_label collides with an object label");
  }
  for (const auto& m : motions) {
    if (!ids.count(m.object_id)) throw DataError("scene spec: motion references unknown object " + std::to_string(m.object_id));
    if (m.timestep < 1 || m.timestep >= timesteps) throw DataError("scene spec: motion timestep out of range");
  }
}

LabelMap SceneSpec::labels() const {
  LabelMap out;
  for (const auto& o : objects) out[o.id] = o.label;
  if (ground_plane) out[ground_id] = ground_label;
  return out;
}

SceneSpec scene_spec_from_json(const json& doc) {
  SceneSpec s;
  try {
    s.points_per_object = field(doc, "points_per_object", s.points_per_object);
    s.ground_plane = field(doc, "ground_plane", s.ground_plane);
    s.ground_id = field(doc, "ground_id", s.ground_id);
    s.ground_label = field(doc, "ground_label", s.ground_label);
    s.timesteps = field<std::size_t>(doc, "timesteps", s.timesteps);
    s.noise_std = field(doc, "noise_std", s.noise_std);
    s.seed = field<std::uint64_t>(doc, "seed", s.seed);
    ObjectId next_id = 1;
    for (const auto& o : doc.at("objects")) {
      ObjectSpec obj;
      obj.id = field(o, "id", next_id);
      next_id = obj.id + 1;
      obj.label = field(o, "label", "object_" + std::to_string(obj.id));
      const auto shape = field<std::string>(o, "shape", "box");
      if (shape == "box") {
        obj.shape = Primitive::kBox;
      } else if (shape == "sphere") {
        obj.shape = Primitive::kSphere;
      } else if (shape == "cylinder") {
        obj.shape = Primitive::kCylinder;
      } else {
        throw DataError("scene spec: unknown shape '" + shape + "'");
      }
      obj.center = parse_point(o.at("center"), "center");
      obj.size = parse_point(o.at("size"), "size");
      const auto c = parse_point(o.at("color"), "color");
      obj.color = {c.x, c.y, c.z};
      s.objects.push_back(obj);
    }
    if (doc.contains("motions")) {
      for (const auto& m : doc.at("motions")) {
        RigidMotion mo;
        mo.timestep = m.at("t").get<std::uint64_t>();
        mo.object_id = m.at("object").get<ObjectId>();
        if (m.contains("translate")) mo.translation = parse_point(m.at("translate"), "translate");
        mo.rotate_z_deg = field(m, "rotate_z_deg", 0.0);
        s.motions.push_back(mo);
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

json scene_spec_to_json(const SceneSpec& s) {
  json doc;
  doc["seed"] = s.seed;
  doc["points_per_object"] = s.points_per_object;
  doc["ground_plane"] = s.ground_plane;
  doc["ground_id"] = s.ground_id;
  doc["ground_label"] = s.ground_label;
  doc["timesteps"] = s.timesteps;
  doc["noise_std"] = s.noise_std;
  doc["objects"] = json::array();
  for (const auto& o : s.objects) {
    const char* shape = o.shape == Primitive::kBox ? "box" : o.shape == Primitive::kSphere ? "sphere" : "cylinder";
    doc["objects"].push_back({{"id", o.id},
                              {"label", o.label},
                              {"shape", shape},
                              {"center", vec3_json(o.center)},
                              {"size", vec3_json(o.size)},
                              {"color", {o.color.r, o.color.g, o.color.b}}});
  }
  doc["motions"] = json::array();
  for (const auto& m : s.motions) {
    doc["motions"].push_back({{"t", m.timestep},
                              {"object", m.object_id},
                              {"translate", vec3_json(m.translation)},
                              {"rotate_z_deg", m.rotate_z_deg}});
  }
  return doc;
}

SceneSpec load_scene_spec(const fs::path& path) { return scene_spec_from_json(read_json(path)); }

// --- generation -------------------------------------------------------------

namespace {

Eigen::Vector3d sample_box(const Eigen::Vector3d& half, double u0, double u1, double u2) {
  const double ax = half.y() * half.z(), ay = half.x() * half.z(), az = half.x() * half.y();
  const double total = 2.0 * (ax + ay + az);
  double pick = u0 * total;
  const double a = 2.0 * u1 - 1.0;
  const double b = 2.0 * u2 - 1.0;
  // six faces, two per axis, chosen by area
  const double faces[6] = {ax, ax, ay, ay, az, az};
  int f = 0;
  while (f < 5 && pick >= faces[f]) pick -= faces[f++];
  const double s = (f % 2 == 0) ? 1.0 : -1.0;
  switch (f / 2) {
    case 0: return {s * half.x(), a * half.y(), b * half.z()};
    case 1: return {a * half.x(), s * half.y(), b * half.z()};
    default: return {a * half.x(), b * half.y(), s * half.z()};
  }
}

Eigen::Vector3d sample_sphere(double r, double u1, double u2) {
  const double z = 1.0 - 2.0 * u1;
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * u2;
  return r * Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), z);
}

Eigen::Vector3d sample_cylinder(double r, double h, double u0, double u1, double u2) {
  const double lateral = 2.0 * std::numbers::pi * r * h;
  const double cap = std::numbers::pi * r * r;
  const double pick = u0 * (lateral + 2.0 * cap);
  const double phi = 2.0 * std::numbers::pi * u1;
  if (pick < lateral) return {r * std::cos(phi), r * std::sin(phi), (u2 - 0.5) * h};
  const double rho = r * std::sqrt(u2);
  const double z = pick < lateral + cap ? 0.5 * h : -0.5 * h;
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

struct LiveObject {
  ObjectId id = 0;
  ColorRGB color;
  Eigen::Vector3d center;
  std::vector<Eigen::Vector3d> points;
};

}  // namespace

std::vector<SegmentedPointCloud> generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  const CounterRng rng(seed);
  std::vector<LiveObject> live;

  for (std::size_t oi = 0; oi < spec.objects.size(); ++oi) {
    const auto& o = spec.objects[oi];
    LiveObject obj{o.id, o.color, o.center.vec(), {}};
    const Eigen::Vector3d half = 0.5 * o.size.vec();
    for (int k = 0; k < spec.points_per_object; ++k) {
      const auto c = static_cast<std::uint64_t>(k) * 3;
      const double u0 = rng.uniform(oi, c), u1 = rng.uniform(oi, c + 1), u2 = rng.uniform(oi, c + 2);
      Eigen::Vector3d local;
      switch (o.shape) {
        case Primitive::kBox: local = sample_box(half, u0, u1, u2); break;
        case Primitive::kSphere: local = sample_sphere(half.x(), u1, u2); break;
        case Primitive::kCylinder: local = sample_cylinder(half.x(), o.size.z, u0, u1, u2); break;
      }
      Eigen::Vector3d p = obj.center + local;
      if (spec.noise_std > 0.0) {
        const std::uint64_t noise_stream = (1ULL << 32) + oi;
        for (int d = 0; d < 3; ++d) p[d] += spec.noise_std * rng.normal(noise_stream, static_cast<std::uint64_t>(k) * 3 + d);
      }
      obj.points.push_back(p);
    }
    live.push_back(std::move(obj));
  }

  if (spec.ground_plane) {
    Eigen::Vector3d lo = live.front().points.front(), hi = lo;
    for (const auto& o : live) {
      for (const auto& p : o.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
    const double pad = 0.5;
    LiveObject ground{spec.ground_id, {0.6, 0.55, 0.45}, Eigen::Vector3d(0.5 * (lo.x() + hi.x()), 0.5 * (lo.y() + hi.y()), lo.z()), {}};
    const std::uint64_t stream = spec.objects.size();
    const int n = spec.points_per_object * 4;
    for (int k = 0; k < n; ++k) {
      const double u1 = rng.uniform(stream, 2 * static_cast<std::uint64_t>(k));
      const double u2 = rng.uniform(stream, 2 * static_cast<std::uint64_t>(k) + 1);
      ground.points.emplace_back(lo.x() - pad + u1 * (hi.x() - lo.x() + 2 * pad), lo.y() - pad + u2 * (hi.y() - lo.y() + 2 * pad), lo.z());
    }
    live.push_back(std::move(ground));
  }

  std::vector<SegmentedPointCloud> frames;
  frames.reserve(spec.timesteps);
  for (std::size_t t = 0; t < spec.timesteps; ++t) {
    for (const auto& m : spec.motions) {
      if (m.timestep != t) continue;
      auto it = std::find_if(live.begin(), live.end(), [&](const LiveObject& o) { return o.id == m.object_id; });
      if (m.rotate_z_deg != 0.0) {
        const Eigen::Matrix3d rot =
            Eigen::AngleAxisd(m.rotate_z_deg * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        for (auto& p : it->points) p = it->center + rot * (p - it->center);
      }
      const Eigen::Vector3d tr = m.translation.vec();
      for (auto& p : it->points) p += tr;
      it->center += tr;
    }
    SegmentedPointCloud cloud;
    cloud.timestep = t;
    for (const auto& o : live) {
      for (const auto& p : o.points) cloud.points.push_back({Point3::from(p), o.color, o.id});
    }
    frames.push_back(std::move(cloud));
  }
  return frames;
}

SceneSpec ring_scene(std::size_t n_objects, int points_per_object) {
  SceneSpec s;
  s.points_per_object = points_per_object;
  const double size = 0.3;
  const double radius = std::max(1.0, static_cast<double>(n_objects) * 0.9 / (2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < n_objects; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_objects);
    // distinct saturated hues
    const double h = 6.0 * static_cast<double>(i) / static_cast<double>(n_objects);
    const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
    ColorRGB c;
    switch (static_cast<int>(h)) {
      case 0: c = {1, x, 0}; break;
      case 1: c = {x, 1, 0}; break;
      case 2: c = {0, 1, x}; break;
      case 3: c = {0, x, 1}; break;
      case 4: c = {x, 0, 1}; break;
      default: c = {1, 0, x}; break;
    }
    ObjectSpec o;
    o.id = static_cast<ObjectId>(i + 1);
    o.label = "object_" + std::to_string(i + 1);
    o.shape = Primitive::kBox;
    o.center = {radius * std::cos(a), radius * std::sin(a), size / 2};
    o.size = {size, size, size};
    o.color = c;
    s.objects.push_back(o);
  }
  return s;
}

// --- change detection -------------------------------------------------------

ChangeSet detect_changed_objects(const SegmentedPointCloud& prev, const SegmentedPointCloud& curr,
                                 double change_epsilon) {
  const auto before = prev.indices_by_object();
  const auto after = curr.indices_by_object();
  ChangeSet changed;
  for (const auto& [id, idx] : after) {
    const auto it = before.find(id);
    if (it == before.end() || it->second.size() != idx.size()) {
      changed.insert(id);
      continue;
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& a = prev.points[it->second[k]];
      const auto& b = curr.points[idx[k]];
      const bool moved = (a.position.vec() - b.position.vec()).norm() > change_epsilon;
      const bool recolored = std::abs(a.color.r - b.color.r) > change_epsilon ||
                             std::abs(a.color.g - b.color.g) > change_epsilon ||
                             std::abs(a.color.b - b.color.b) > change_epsilon;
      if (moved || recolored) {
        changed.insert(id);
        break;
      }
    }
  }
  return changed;
}

std::set<ObjectId> removed_objects(const SegmentedPointCloud& prev, const SegmentedPointCloud& curr) {
  const auto after = curr.object_ids();
  std::set<ObjectId> out;
  for (ObjectId id : prev.object_ids()) {
    if (!std::binary_search(after.begin(), after.end(), id)) out.insert(id);
  }
  return out;
}

// --- orbit frames -----------------------------------------------------------

OrbitFrame render_frame(const SegmentedPointCloud& cloud, const CameraPose& camera, int splat_radius_px) {
  const auto pts = cloud.positions();
  std::vector<Rgb8> colors;
  colors.reserve(cloud.size());
  for (const auto& p : cloud.points) colors.push_back(to_rgb8(p.color));
  auto raster = rasterize(pts, colors, camera, splat_radius_px);
  OrbitFrame f;
  f.camera = camera;
  f.mask.width = raster.image.width;
  f.mask.height = raster.image.height;
  f.mask.ids.resize(raster.point_index.size());
  for (std::size_t i = 0; i < raster.point_index.size(); ++i) {
    const auto pi = raster.point_index[i];
    f.mask.ids[i] = pi < 0 ? kNoObject : static_cast<std::int64_t>(cloud.points[static_cast<std::size_t>(pi)].object_id);
  }
  f.image = std::move(raster.image);
  return f;
}

std::vector<OrbitFrame> generate_orbit_frames(const SegmentedPointCloud& cloud, std::size_t n_frames,
                                              const OrbitParams& params) {
  if (n_frames < 1) throw DataError("generate_orbit_frames: n_frames must be >= 1");
  if (cloud.empty()) throw DataError("generate_orbit_frames: empty cloud");
  const auto pts = cloud.positions();
  const BoundingSphere sphere = bounding_sphere(pts);
  const double half_fov = params.fov_deg * std::numbers::pi / 360.0;
  const double distance = sphere.radius > 0.0 ? params.frame_margin * sphere.radius / std::tan(half_fov)
                                              : params.frame_margin * params.voxel_size;
  const double elevation = params.elevation_deg * std::numbers::pi / 180.0;

  std::vector<OrbitFrame> frames(n_frames);
  const auto n = static_cast<std::ptrdiff_t>(n_frames);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const double az_deg = 360.0 * static_cast<double>(k) / static_cast<double>(n_frames);
    const Eigen::Vector3d u = angles_to_direction({elevation, az_deg * std::numbers::pi / 180.0});
    CameraPose cam;
    cam.look_at = Point3::from(sphere.center);
    cam.position = Point3::from(sphere.center + distance * u);
    cam.up = std::abs(u.z()) > 0.99 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitZ();
    cam.fov_deg = params.fov_deg;
    cam.resolution = params.resolution;
    OrbitFrame f = render_frame(cloud, cam, params.splat_radius_px);
    f.azimuth_deg = az_deg;
    frames[static_cast<std::size_t>(k)] = std::move(f);
  }
  return frames;
}

}  // namespace vafs
