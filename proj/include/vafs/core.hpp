#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vafs {

/// Opaque per-object handle. Human-readable labels live in the scene manifest.
using ObjectId = std::uint32_t;
using LabelMap = std::map<ObjectId, std::string>;

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: parse failures, invariant violations, missing objects.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failure reported by (or while talking to) an encoder.
class EncoderError : public Error {
 public:
  explicit EncoderError(const std::string& what, std::optional<std::int64_t> request_id = std::nullopt)
      : Error(request_id ? what + " (request id " + std::to_string(*request_id) + ")" : what),
        request_id_(request_id) {}
  std::optional<std::int64_t> request_id() const { return request_id_; }

 private:
  std::optional<std::int64_t> request_id_;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static Point3 from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
  friend bool operator==(const Point3&, const Point3&) = default;
};

/// Channels in [0,1].
struct ColorRGB {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  bool in_range() const {
    auto ok = [](double c) { return c >= 0.0 && c <= 1.0; };  // false for NaN
    return ok(r) && ok(g) && ok(b);
  }
  friend bool operator==(const ColorRGB&, const ColorRGB&) = default;
};

struct SegmentedPoint {
  Point3 position;
  ColorRGB color;
  ObjectId object_id = 0;
  friend bool operator==(const SegmentedPoint&, const SegmentedPoint&) = default;
};

/// Ground-truth segmented cloud for one timestep. Point index is identity within a frame.
struct SegmentedPointCloud {
  std::uint64_t timestep = 0;
  std::vector<SegmentedPoint> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  /// Sorted, unique.
  std::vector<ObjectId> object_ids() const;
  /// Point indices per object, each list in ascending index order.
  std::map<ObjectId, std::vector<std::size_t>> indices_by_object() const;
  std::vector<Point3> positions() const;
  friend bool operator==(const SegmentedPointCloud&, const SegmentedPointCloud&) = default;
};

/// Fixed-dimension embedding-space vector.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {}
  static FeatureVector zeros(std::size_t dim) { return FeatureVector(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double norm() const;
  bool finite() const;
  bool is_unit(double tol = 1e-6) const { return std::abs(norm() - 1.0) <= tol; }
  /// Throws DataError if the norm is zero or not finite.
  FeatureVector normalized() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<double> values_;
};

double dot(const FeatureVector& a, const FeatureVector& b);
double cosine(const FeatureVector& a, const FeatureVector& b);
void require_same_dim(const FeatureVector& a, const FeatureVector& b, const char* where);

struct ConceptPoint {
  Point3 position;
  FeatureVector feature;
  std::optional<ObjectId> source_object;
  friend bool operator==(const ConceptPoint&, const ConceptPoint&) = default;
};

/// Points paired with semantic features. voxel_size is set once the cloud has been aggregated.
struct ConceptCloud {
  std::vector<ConceptPoint> points;
  std::size_t feature_dim = 0;
  std::optional<double> voxel_size;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  friend bool operator==(const ConceptCloud&, const ConceptCloud&) = default;
};

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

Rgb8 to_rgb8(const ColorRGB& c);

/// Row-major 8-bit RGB image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, Rgb8 fill = {});

  bool empty() const { return width <= 0 || height <= 0; }
  Rgb8 at(int x, int y) const {
    const auto o = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[o], pixels[o + 1], pixels[o + 2]};
  }
  void set(int x, int y, Rgb8 c) {
    const auto o = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[o] = c.r;
    pixels[o + 1] = c.g;
    pixels[o + 2] = c.b;
  }
  friend bool operator==(const Image&, const Image&) = default;
};

inline constexpr Rgb8 kBackground{128, 128, 128};

struct Resolution {
  int width = 224;
  int height = 224;
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct RunConfig {
  double voxel_size = 0.1;
  // Parsed and stored, no semantics attached.
  double voxel_increment = 0.1;
  int knn_k = 16;
  double outlier_std_mult = 2.0;
  double fov_deg = 60.0;
  double frame_margin = 1.2;
  Resolution render_resolution{};
  int splat_radius_px = 1;
  double change_epsilon = 1e-6;
  double relevancy_threshold = 0.5;

  /// Throws DataError naming the first offending key.
  void validate() const;
};

struct Violation {
  std::optional<std::size_t> point_index;
  std::string rule;
  std::string describe() const;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Never throws; an empty result means every invariant holds.
std::vector<Violation> validate_cloud(const SegmentedPointCloud& cloud);

/// Throws DataError listing the first few violations.
void require_valid(const SegmentedPointCloud& cloud, const std::string& context);

}  // namespace vafs
