#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vafs/camera.hpp"
#include "vafs/core.hpp"

namespace vafs {

struct RasterOutput {
  Image image;
  /// Winning point index per pixel (row-major), -1 for background.
  std::vector<std::int64_t> point_index;
};

/// Z-buffered square point splats of side 2*splat_radius_px+1 on a mid-gray background.
/// Per pixel the smallest depth wins; equal depths resolve to the lower point index.
/// OpenMP over horizontal bands of rows; bit-identical to serial::rasterize.
RasterOutput rasterize(std::span<const Point3> points, std::span<const Rgb8> colors, const CameraPose& camera,
                       int splat_radius_px);

namespace serial {
RasterOutput rasterize(std::span<const Point3> points, std::span<const Rgb8> colors, const CameraPose& camera,
                       int splat_radius_px);
}  // namespace serial

}  // namespace vafs
