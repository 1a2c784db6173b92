#include "vafs/view_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "vafs/knn.hpp"
#include "vafs/raster.hpp"

namespace vafs {

namespace {

std::vector<Eigen::Vector3d> to_vectors(std::span<const Point3> points) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.vec());
  return out;
}

double mean_distance(const std::vector<Neighbor>& nbrs) {
  double s = 0.0;
  for (const auto& n : nbrs) s += std::sqrt(n.sq_distance);
  return nbrs.empty() ? 0.0 : s / static_cast<double>(nbrs.size());
}

std::vector<bool> threshold_statistic(const std::vector<double>& stat, double std_mult) {
  double mean = 0.0;
  for (double s : stat) mean += s;
  mean /= static_cast<double>(stat.size());
  double var = 0.0;
  for (double s : stat) var += (s - mean) * (s - mean);
  const double limit = mean + std_mult * std::sqrt(var / static_cast<double>(stat.size()));
  std::vector<bool> keep(stat.size());
  for (std::size_t i = 0; i < stat.size(); ++i) keep[i] = stat[i] <= limit;
  return keep;
}

Eigen::Vector3d centroid(std::span<const Eigen::Vector3d> pts) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

NormalEstimate pca_normal(std::span<const Eigen::Vector3d> pts, std::size_t self, const std::vector<Neighbor>& nbrs,
                          const Eigen::Vector3d& object_centroid) {
  Eigen::Vector3d mean = pts[self];
  for (const auto& n : nbrs) mean += pts[n.index];
  mean /= static_cast<double>(nbrs.size() + 1);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  auto accumulate = [&](const Eigen::Vector3d& p) {
    const Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  };
  accumulate(pts[self]);
  for (const auto& n : nbrs) accumulate(pts[n.index]);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Eigen::Vector3d ev = solver.eigenvalues();
  // Collinear or coincident neighbourhoods have no defined plane.
  if (!(ev[2] > 1e-300) || ev[1] <= 1e-12 * ev[2]) return std::nullopt;

  Eigen::Vector3d n = solver.eigenvectors().col(0).normalized();
  const double s = n.dot(pts[self] - object_centroid);
  constexpr double kTie = 1e-9;
  bool flip = false;
  if (std::abs(s) > kTie) {
    flip = s < 0.0;
  } else if (std::abs(n.z()) > kTie) {
    flip = n.z() < 0.0;
  } else if (std::abs(n.x()) > kTie) {
    flip = n.x() < 0.0;
  } else {
    flip = n.y() < 0.0;
  }
  if (flip) n = -n;
  return UnitNormal{n};
}

std::size_t effective_k(int knn_k, std::size_t n) {
  return std::min<std::size_t>(static_cast<std::size_t>(std::max(knn_k, 1)), n - 1);
}

}  // namespace

std::vector<bool> filter_outliers(std::span<const Point3> points, int knn_k, double outlier_std_mult) {
  if (points.size() <= static_cast<std::size_t>(std::max(knn_k, 0))) return std::vector<bool>(points.size(), true);
  const auto pts = to_vectors(points);
  const auto nbrs = knn_all(pts, static_cast<std::size_t>(knn_k));
  std::vector<double> stat(pts.size());
  const auto n = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) stat[static_cast<std::size_t>(i)] = mean_distance(nbrs[static_cast<std::size_t>(i)]);
  return threshold_statistic(stat, outlier_std_mult);
}

std::vector<NormalEstimate> estimate_normals(std::span<const Point3> points, int knn_k) {
  if (points.size() < 3) throw DataError("estimate_normals needs at least 3 points");
  const auto pts = to_vectors(points);
  const auto nbrs = knn_all(pts, effective_k(knn_k, pts.size()));
  const Eigen::Vector3d c = centroid(pts);
  std::vector<NormalEstimate> out(pts.size());
  const auto n = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    out[ui] = pca_normal(pts, ui, nbrs[ui], c);
  }
  return out;
}

namespace serial {

std::vector<bool> filter_outliers(std::span<const Point3> points, int knn_k, double outlier_std_mult) {
  if (points.size() <= static_cast<std::size_t>(std::max(knn_k, 0))) return std::vector<bool>(points.size(), true);
  const auto pts = to_vectors(points);
  const auto nbrs = serial::knn_all(pts, static_cast<std::size_t>(knn_k));
  std::vector<double> stat(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) stat[i] = mean_distance(nbrs[i]);
  return threshold_statistic(stat, outlier_std_mult);
}

std::vector<NormalEstimate> estimate_normals(std::span<const Point3> points, int knn_k) {
  if (points.size() < 3) throw DataError("estimate_normals needs at least 3 points");
  const auto pts = to_vectors(points);
  const auto nbrs = serial::knn_all(pts, effective_k(knn_k, pts.size()));
  const Eigen::Vector3d c = centroid(pts);
  std::vector<NormalEstimate> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = pca_normal(pts, i, nbrs[i], c);
  return out;
}

}  // namespace serial

MeanNormal mean_unit_normal(std::span<const NormalEstimate> normals) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  std::size_t valid = 0;
  for (const auto& n : normals) {
    if (!n) continue;
    sum += n->direction;
    ++valid;
  }
  if (valid == 0) {
    spdlog::info("mean_unit_normal: no valid normals, falling back to +z");
    return {UnitNormal{Eigen::Vector3d::UnitZ()}, true};
  }
  const Eigen::Vector3d mean = sum / static_cast<double>(valid);
  if (!(mean.norm() > 1e-9)) {
    spdlog::info("mean_unit_normal: normals cancel (|mean| = {:.3g}), falling back to +z", mean.norm());
    return {UnitNormal{Eigen::Vector3d::UnitZ()}, true};
  }
  return {UnitNormal{mean / mean.norm()}, false};
}

ViewAngles normal_to_angles(const UnitNormal& n) {
  const Eigen::Vector3d& d = n.direction;
  ViewAngles a;
  a.elevation = std::asin(std::clamp(d.z(), -1.0, 1.0));
  if (d.x() == 0.0 && d.y() == 0.0) {
    a.azimuth = 0.0;
  } else {
    a.azimuth = std::atan2(d.y(), d.x());
    if (a.azimuth == -std::numbers::pi) a.azimuth = std::numbers::pi;
  }
  return a;
}

Eigen::Vector3d angles_to_direction(const ViewAngles& a) {
  const double ce = std::cos(a.elevation);
  return {ce * std::cos(a.azimuth), ce * std::sin(a.azimuth), std::sin(a.elevation)};
}

BoundingSphere bounding_sphere(std::span<const Point3> points) {
  if (points.empty()) throw DataError("bounding_sphere of an empty point set");
  BoundingSphere s;
  for (const auto& p : points) s.center += p.vec();
  s.center /= static_cast<double>(points.size());
  for (const auto& p : points) s.radius = std::max(s.radius, (p.vec() - s.center).norm());
  return s;
}

CameraPose plan_camera(std::span<const Point3> points, const ViewAngles& angles, double fov_deg, double frame_margin,
                       Resolution resolution, double voxel_size) {
  const BoundingSphere sphere = bounding_sphere(points);
  const Eigen::Vector3d u = angles_to_direction(angles);
  const double half_fov = fov_deg * std::numbers::pi / 360.0;
  const double distance =
      sphere.radius > 0.0 ? frame_margin * sphere.radius / std::tan(half_fov) : frame_margin * voxel_size;
  CameraPose cam;
  cam.look_at = Point3::from(sphere.center);
  cam.position = Point3::from(sphere.center + distance * u);
  cam.up = std::abs(u.z()) > 0.99 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitZ();
  cam.fov_deg = fov_deg;
  cam.resolution = resolution;
  return cam;
}

Image render_view(std::span<const Point3> points, std::span<const ColorRGB> colors, const CameraPose& camera,
                  int splat_radius_px) {
  if (points.size() != colors.size()) throw DataError("render_view: points and colors differ in length");
  std::vector<Rgb8> rgb;
  rgb.reserve(colors.size());
  for (const auto& c : colors) rgb.push_back(to_rgb8(c));
  return rasterize(points, rgb, camera, splat_radius_px).image;
}

ViewPlan plan_view(std::span<const Point3> points, const RunConfig& config) {
  if (points.empty()) throw DataError("cannot plan a view of an empty point set");
  ViewPlan plan;
  const auto keep = filter_outliers(points, config.knn_k, config.outlier_std_mult);
  std::vector<Point3> inlier_pts;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!keep[i]) continue;
    plan.inliers.push_back(i);
    inlier_pts.push_back(points[i]);
  }
  if (plan.inliers.empty()) throw DataError("every point was rejected as an outlier");

  if (inlier_pts.size() >= 3) {
    const auto normals = estimate_normals(inlier_pts, config.knn_k);
    plan.normal = mean_unit_normal(normals);
  } else {
    plan.normal = mean_unit_normal({});
  }
  plan.angles = normal_to_angles(plan.normal.normal);
  plan.camera = plan_camera(inlier_pts, plan.angles, config.fov_deg, config.frame_margin, config.render_resolution,
                            config.voxel_size);
  return plan;
}

Image render_plan(const ViewPlan& plan, std::span<const Point3> points, std::span<const ColorRGB> colors,
                  const RunConfig& config) {
  std::vector<Point3> pts;
  std::vector<ColorRGB> cols;
  pts.reserve(plan.inliers.size());
  cols.reserve(plan.inliers.size());
  for (std::size_t i : plan.inliers) {
    pts.push_back(points[i]);
    cols.push_back(colors[i]);
  }
  return render_view(pts, cols, plan.camera, config.splat_radius_px);
}

namespace {

Image synthesize(const SegmentedPointCloud& cloud, std::span<const std::size_t> indices, const RunConfig& config) {
  std::vector<Point3> pts;
  std::vector<ColorRGB> cols;
  pts.reserve(indices.size());
  cols.reserve(indices.size());
  for (std::size_t i : indices) {
    pts.push_back(cloud.points[i].position);
    cols.push_back(cloud.points[i].color);
  }
  const ViewPlan plan = plan_view(pts, config);
  return render_plan(plan, pts, cols, config);
}

}  // namespace

Image synthesize_object_view(const SegmentedPointCloud& cloud, ObjectId object_id, const RunConfig& config) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.points[i].object_id == object_id) idx.push_back(i);
  }
  if (idx.empty()) throw DataError("object " + std::to_string(object_id) + " is not present in the cloud");
  try {
    return synthesize(cloud, idx, config);
  } catch (const DataError& e) {
    throw DataError("object " + std::to_string(object_id) + ": " + e.what());
  }
}

Image synthesize_global_view(const SegmentedPointCloud& cloud, const RunConfig& config) {
  if (cloud.empty()) throw DataError("cannot synthesize a global view of an empty cloud");
  std::vector<std::size_t> idx(cloud.points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return synthesize(cloud, idx, config);
}

}  // namespace vafs
