#pragma once

#include <optional>

#include <Eigen/Core>

#include "vafs/core.hpp"

namespace vafs {

struct CameraPose {
  Point3 position;
  Point3 look_at;
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  double fov_deg = 60.0;
  Resolution resolution{};

  /// Throws DataError when position == look_at or up is parallel to the view direction.
  void validate() const;
};

/// Pinhole intrinsics and an orthonormal camera basis. The focal length is set by the smaller
/// image side so fov_deg bounds both axes; the principal point is (w/2, h/2).
struct CameraFrame {
  Eigen::Vector3d origin;
  Eigen::Vector3d right;
  Eigen::Vector3d down;
  Eigen::Vector3d forward;
  double focal_px = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

CameraFrame camera_frame(const CameraPose& pose);

struct Projection {
  double u = 0.0;      // continuous pixel column; pixel = floor(u)
  double v = 0.0;      // continuous pixel row
  double depth = 0.0;  // along the optical axis
};

inline constexpr double kNearPlane = 1e-9;

/// nullopt for points at or behind the near plane.
inline std::optional<Projection> project(const CameraFrame& cam, const Eigen::Vector3d& p) {
  const Eigen::Vector3d d = p - cam.origin;
  const double z = d.dot(cam.forward);
  if (!(z > kNearPlane)) return std::nullopt;
  return Projection{cam.cx + cam.focal_px * d.dot(cam.right) / z, cam.cy + cam.focal_px * d.dot(cam.down) / z, z};
}

inline bool inside_image(const CameraFrame& cam, const Projection& pr) {
  return pr.u >= 0.0 && pr.u < cam.width && pr.v >= 0.0 && pr.v < cam.height;
}

}  // namespace vafs
