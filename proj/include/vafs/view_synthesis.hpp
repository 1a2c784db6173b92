#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vafs/camera.hpp"
#include "vafs/core.hpp"

namespace vafs {

struct UnitNormal {
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  friend bool operator==(const UnitNormal& a, const UnitNormal& b) { return a.direction == b.direction; }
};

/// Invalid (nullopt) for degenerate neighbourhoods: coincident or collinear points.
using NormalEstimate = std::optional<UnitNormal>;

/// Keep-mask. A point is kept iff the mean distance to its knn_k nearest neighbours is at most
/// mean + outlier_std_mult * std of that statistic over all points. Inputs with at most knn_k
/// points are kept whole.
std::vector<bool> filter_outliers(std::span<const Point3> points, int knn_k, double outlier_std_mult);

/// PCA normal per point: smallest-eigenvalue eigenvector of the covariance of the point and its
/// knn_k nearest neighbours, oriented away from the centroid of `points`. When that dot product is
/// within 1e-9 of zero the sign is chosen to make z positive, then x, then y.
/// Throws DataError for fewer than 3 points.
std::vector<NormalEstimate> estimate_normals(std::span<const Point3> points, int knn_k);

namespace serial {
std::vector<bool> filter_outliers(std::span<const Point3> points, int knn_k, double outlier_std_mult);
std::vector<NormalEstimate> estimate_normals(std::span<const Point3> points, int knn_k);
}  // namespace serial

struct MeanNormal {
  UnitNormal normal;
  /// Set when no valid normal was available or the mean cancelled; normal is then +z.
  bool degenerate = false;
};

MeanNormal mean_unit_normal(std::span<const NormalEstimate> normals);

struct ViewAngles {
  double elevation = 0.0;  // [-pi/2, pi/2]
  double azimuth = 0.0;    // (-pi, pi]
};

/// elevation = asin(n_z), azimuth = atan2(n_y, n_x) with azimuth 0 at the poles.
ViewAngles normal_to_angles(const UnitNormal& n);
Eigen::Vector3d angles_to_direction(const ViewAngles& a);

struct BoundingSphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

/// Centroid-centred enclosing sphere. Throws DataError on empty input.
BoundingSphere bounding_sphere(std::span<const Point3> points);

/// Camera on the ray from the bounding-sphere centre along the given angles, at distance
/// frame_margin * r / tan(fov/2), or frame_margin * voxel_size when r = 0. Up is +z unless the
/// view direction is within |u_z| > 0.99 of a pole, then +x.
CameraPose plan_camera(std::span<const Point3> points, const ViewAngles& angles, double fov_deg, double frame_margin,
                       Resolution resolution, double voxel_size);

/// Z-buffered splat rendering of coloured points (see rasterize()).
Image render_view(std::span<const Point3> points, std::span<const ColorRGB> colors, const CameraPose& camera,
                  int splat_radius_px);

/// Everything decided before rendering one synthetic view.
struct ViewPlan {
  std::vector<std::size_t> inliers;  // indices into the planned point set
  MeanNormal normal;
  ViewAngles angles;
  CameraPose camera;
};

/// Outlier filter, normals, mean normal, angles and camera for one point set.
/// Throws DataError if the set is empty or every point is rejected.
ViewPlan plan_view(std::span<const Point3> points, const RunConfig& config);

/// Renders the inliers of a plan.
Image render_plan(const ViewPlan& plan, std::span<const Point3> points, std::span<const ColorRGB> colors,
                  const RunConfig& config);

/// Synthetic view of one object's points in isolation.
Image synthesize_object_view(const SegmentedPointCloud& cloud, ObjectId object_id, const RunConfig& config);
/// The same pipeline applied to every point of the cloud.
Image synthesize_global_view(const SegmentedPointCloud& cloud, const RunConfig& config);

}  // namespace vafs
