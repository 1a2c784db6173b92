#include "vafs/core.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace vafs {

std::vector<ObjectId> SegmentedPointCloud::object_ids() const {
  std::vector<ObjectId> ids;
  ids.reserve(points.size());
  for (const auto& p : points) ids.push_back(p.object_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::map<ObjectId, std::vector<std::size_t>> SegmentedPointCloud::indices_by_object() const {
  std::map<ObjectId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < points.size(); ++i) groups[points[i].object_id].push_back(i);
  return groups;
}

std::vector<Point3> SegmentedPointCloud::positions() const {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.position);
  return out;
}

double FeatureVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

bool FeatureVector::finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

FeatureVector FeatureVector::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DataError("cannot normalize a zero or non-finite feature vector");
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) out[i] = values_[i] / n;
  return FeatureVector(std::move(out));
}

void require_same_dim(const FeatureVector& a, const FeatureVector& b, const char* where) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << where << ": feature dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw DataError(os.str());
  }
}

double dot(const FeatureVector& a, const FeatureVector& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(const FeatureVector& a, const FeatureVector& b) {
  const double d = dot(a, b);
  const double n = a.norm() * b.norm();
  return n > 0.0 ? d / n : 0.0;
}

Rgb8 to_rgb8(const ColorRGB& c) {
  auto q = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  return {q(c.r), q(c.g), q(c.b)};
}

Image::Image(int w, int h, Rgb8 fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DataError("image dimensions must be positive");
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& rule) {
    throw DataError("invalid config: " + key + " " + rule);
  };
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) fail("voxel_size", "must be > 0");
  if (!(voxel_increment > 0.0) || !std::isfinite(voxel_increment)) fail("voxel_increment", "must be > 0");
  if (knn_k < 3) fail("knn_k", "must be >= 3");
  if (!std::isfinite(outlier_std_mult)) fail("outlier_std_mult", "must be finite");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) fail("fov_deg", "must be in (0,180)");
  if (!(frame_margin >= 1.0) || !std::isfinite(frame_margin)) fail("frame_margin", "must be >= 1");
  if (render_resolution.width <= 0 || render_resolution.height <= 0) fail("render_resolution", "must be positive");
  if (splat_radius_px < 0) fail("splat_radius_px", "must be >= 0");
  if (!(change_epsilon >= 0.0)) fail("change_epsilon", "must be >= 0");
  if (!(relevancy_threshold >= 0.0 && relevancy_threshold <= 1.0)) fail("relevancy_threshold", "must be in [0,1]");
}

std::string Violation::describe() const {
  std::ostringstream os;
  if (point_index) os << "point " << *point_index << ": ";
  os << rule;
  return os.str();
}

std::vector<Violation> validate_cloud(const SegmentedPointCloud& cloud) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    if (!p.position.finite()) out.push_back({i, "position must be finite"});
    if (!p.color.in_range()) out.push_back({i, "color channels must lie in [0,1]"});
  }
  return out;
}

void require_valid(const SegmentedPointCloud& cloud, const std::string& context) {
  const auto violations = validate_cloud(cloud);
  if (violations.empty()) return;
  std::ostringstream os;
  os << context << ": " << violations.size() << " invariant violation(s)";
  for (std::size_t i = 0; i < std::min<std::size_t>(violations.size(), 3); ++i) os << "; " << violations[i].describe();
  throw DataError(os.str());
}

}  // namespace vafs
