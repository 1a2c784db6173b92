#include "vafs/camera.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace vafs {

void CameraPose::validate() const {
  const Eigen::Vector3d dir = look_at.vec() - position.vec();
  if (!(dir.norm() > 0.0)) throw DataError("camera position coincides with look_at");
  if (up.normalized().cross(dir.normalized()).norm() < 1e-9) throw DataError("camera up vector is parallel to the view direction");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw DataError("camera fov_deg must be in (0,180)");
  if (resolution.width <= 0 || resolution.height <= 0) throw DataError("camera resolution must be positive");
}

CameraFrame camera_frame(const CameraPose& pose) {
  pose.validate();
  CameraFrame f;
  f.origin = pose.position.vec();
  f.forward = (pose.look_at.vec() - f.origin).normalized();
  f.right = f.forward.cross(pose.up).normalized();
  f.down = f.forward.cross(f.right);  // image rows grow away from `up`
  f.width = pose.resolution.width;
  f.height = pose.resolution.height;
  f.cx = f.width / 2.0;
  f.cy = f.height / 2.0;
  const double half = pose.fov_deg * std::numbers::pi / 360.0;
  f.focal_px = (std::min(f.width, f.height) / 2.0) / std::tan(half);
  return f;
}

}  // namespace vafs
