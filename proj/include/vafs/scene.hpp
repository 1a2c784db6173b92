#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vafs/camera.hpp"
#include "vafs/core.hpp"

namespace vafs {

// ---------------------------------------------------------------------------
// Manifest: {"frames": [paths...], "labels": {"3": "banana"}, "cameras": [...]}
// ---------------------------------------------------------------------------

struct SceneManifest {
  std::vector<std::filesystem::path> frames;  // timestep order
  LabelMap labels;
  /// Optional per-frame cameras for rendering the baseline's input stream.
  std::vector<CameraPose> cameras;
};

/// Relative frame paths resolve against the manifest's directory.
SceneManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const SceneManifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

enum class Primitive { kBox, kSphere, kCylinder };

struct ObjectSpec {
  ObjectId id = 0;
  std::string label;
  Primitive shape = Primitive::kBox;
  Point3 center;
  /// Box: full extents. Sphere: diameter = size.x. Cylinder (z-axis): diameter = size.x, height = size.z.
  Point3 size{0.1, 0.1, 0.1};
  ColorRGB color;
};

/// Applied at `timestep`, composed onto the object's pose from the previous step.
struct RigidMotion {
  std::uint64_t timestep = 1;
  ObjectId object_id = 0;
  Point3 translation;
  double rotate_z_deg = 0.0;  // about the object's current centre
};

struct SceneSpec {
  std::vector<ObjectSpec> objects;
  int points_per_object = 400;
  bool ground_plane = false;
  ObjectId ground_id = 0;
  std::string ground_label = "ground";
  std::size_t timesteps = 1;
  std::vector<RigidMotion> motions;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  /// Throws DataError.
  void validate() const;
  LabelMap labels() const;
};

SceneSpec scene_spec_from_json(const nlohmann::json& doc);
nlohmann::json scene_spec_to_json(const SceneSpec& spec);
SceneSpec load_scene_spec(const std::filesystem::path& path);

/// Deterministic for fixed (spec, seed): surfaces are sampled uniformly by area with a counter-based RNG,
/// and motions move each object's points rigidly.
std::vector<SegmentedPointCloud> generate_scene(const SceneSpec& spec, std::uint64_t seed);

/// `n` equal boxes on a ring, each with a distinct colour; used by the benchmark and acceptance tests.
SceneSpec ring_scene(std::size_t n_objects, int points_per_object = 400);

// ---------------------------------------------------------------------------
// Change detection
// ---------------------------------------------------------------------------

using ChangeSet = std::set<ObjectId>;

/// An object of `curr` changed iff it is absent from `prev`, its point count differs, or any
/// index-aligned point moved or changed a colour channel by more than change_epsilon.
ChangeSet detect_changed_objects(const SegmentedPointCloud& prev, const SegmentedPointCloud& curr,
                                 double change_epsilon);

/// Objects of `prev` that no longer exist in `curr`.
std::set<ObjectId> removed_objects(const SegmentedPointCloud& prev, const SegmentedPointCloud& curr);

// ---------------------------------------------------------------------------
// Orbit frames (the per-frame baseline's input stream)
// ---------------------------------------------------------------------------

inline constexpr std::int64_t kNoObject = -1;

struct ObjectMask {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> ids;  // row-major, kNoObject for background
  std::int64_t at(int x, int y) const { return ids[static_cast<std::size_t>(y) * width + x]; }
};

struct OrbitFrame {
  Image image;
  ObjectMask mask;
  CameraPose camera;
  double azimuth_deg = 0.0;
};

struct OrbitParams {
  double elevation_deg = 30.0;
  double fov_deg = 60.0;
  double frame_margin = 1.2;
  Resolution resolution{};
  int splat_radius_px = 1;
  double voxel_size = 0.1;  // camera distance scale for single-point clouds

  static OrbitParams from(const RunConfig& c) {
    return {30.0, c.fov_deg, c.frame_margin, c.render_resolution, c.splat_radius_px, c.voxel_size};
  }
};

/// Cameras on a circle around the bounding-sphere centre at azimuths k*360/n_frames degrees.
std::vector<OrbitFrame> generate_orbit_frames(const SegmentedPointCloud& cloud, std::size_t n_frames,
                                              const OrbitParams& params);

/// Renders one frame + mask from an explicit camera (manifest camera lists).
OrbitFrame render_frame(const SegmentedPointCloud& cloud, const CameraPose& camera, int splat_radius_px);

}  // namespace vafs
