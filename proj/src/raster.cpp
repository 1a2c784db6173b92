#include "vafs/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

namespace vafs {

namespace {

struct Splat {
  int px = 0;
  int py = 0;
  double depth = 0.0;
  bool visible = false;
};

Splat make_splat(const CameraFrame& cam, const Point3& p) {
  const auto pr = project(cam, p.vec());
  if (!pr || !std::isfinite(pr->u) || !std::isfinite(pr->v)) return {};
  // Projections far outside the image cannot touch it; clamp before converting to int.
  const double lim = 1e7;
  if (std::abs(pr->u) > lim || std::abs(pr->v) > lim) return {};
  return {static_cast<int>(std::floor(pr->u)), static_cast<int>(std::floor(pr->v)), pr->depth, true};
}

void check_inputs(std::span<const Point3> points, std::span<const Rgb8> colors, int splat_radius_px) {
  if (points.size() != colors.size()) throw DataError("rasterize: points and colors differ in length");
  if (splat_radius_px < 0) throw DataError("rasterize: splat radius must be >= 0");
}

/// Splats every point onto rows [row_begin, row_end).
void splat_band(std::span<const Splat> splats, std::span<const Rgb8> colors, int radius, int row_begin, int row_end,
                int width, std::vector<double>& depth, RasterOutput& out) {
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const Splat& s = splats[i];
    if (!s.visible) continue;
    const int y0 = std::max(s.py - radius, row_begin);
    const int y1 = std::min(s.py + radius, row_end - 1);
    const int x0 = std::max(s.px - radius, 0);
    const int x1 = std::min(s.px + radius, width - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * width + x;
        if (s.depth < depth[pix]) {  // strict: earlier (lower) index keeps ties
          depth[pix] = s.depth;
          out.point_index[pix] = static_cast<std::int64_t>(i);
          out.image.set(x, y, colors[i]);
        }
      }
    }
  }
}

RasterOutput make_output(const CameraFrame& cam) {
  RasterOutput out{Image(cam.width, cam.height, kBackground),
                   std::vector<std::int64_t>(static_cast<std::size_t>(cam.width) * cam.height, -1)};
  return out;
}

}  // namespace

RasterOutput rasterize(std::span<const Point3> points, std::span<const Rgb8> colors, const CameraPose& camera,
                       int splat_radius_px) {
  check_inputs(points, colors, splat_radius_px);
  const CameraFrame cam = camera_frame(camera);
  std::vector<Splat> splats(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) splats[static_cast<std::size_t>(i)] = make_splat(cam, points[static_cast<std::size_t>(i)]);

  RasterOutput out = make_output(cam);
  std::vector<double> depth(out.point_index.size(), std::numeric_limits<double>::infinity());
#pragma omp parallel
  {
    // Each thread owns a disjoint band of rows, so no pixel is written by two threads.
    const int nt = omp_get_num_threads();
    const int t = omp_get_thread_num();
    const int rows = cam.height;
    const int begin = rows * t / nt;
    const int end = rows * (t + 1) / nt;
    if (begin < end) splat_band(splats, colors, splat_radius_px, begin, end, cam.width, depth, out);
  }
  return out;
}

namespace serial {

RasterOutput rasterize(std::span<const Point3> points, std::span<const Rgb8> colors, const CameraPose& camera,
                       int splat_radius_px) {
  check_inputs(points, colors, splat_radius_px);
  const CameraFrame cam = camera_frame(camera);
  RasterOutput out = make_output(cam);
  std::vector<double> depth(out.point_index.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Splat s = make_splat(cam, points[i]);
    if (!s.visible) continue;
    for (int y = std::max(s.py - splat_radius_px, 0); y <= std::min(s.py + splat_radius_px, cam.height - 1); ++y) {
      for (int x = std::max(s.px - splat_radius_px, 0); x <= std::min(s.px + splat_radius_px, cam.width - 1); ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
        if (s.depth < depth[pix]) {
          depth[pix] = s.depth;
          out.point_index[pix] = static_cast<std::int64_t>(i);
          out.image.set(x, y, colors[i]);
        }
      }
    }
  }
  return out;
}

}  // namespace serial

}  // namespace vafs
