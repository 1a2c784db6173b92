#pragma once

#include <cstddef>
#include <span>

#include "vafs/core.hpp"
#include "vafs/encoder.hpp"
#include "vafs/feature_pipeline.hpp"
#include "vafs/scene.hpp"

namespace vafs {

struct BaselineResult {
  ConceptCloud cloud;  // voxel-aggregated
  std::size_t encoder_calls = 0;
  StageTimings timings;
};

/// Naive per-frame fusion. Every frame embeds the full image plus one tight crop per object covering
/// at least `min_pixels` mask pixels (1 + visible calls). Crop features are fused with the frame's
/// global feature and averaged per object across frames; objects never seen take the mean global
/// feature. The per-point result is voxel-aggregated at config.voxel_size.
/// Throws DataError for zero frames, a mask that does not match its image, or mask ids absent from `cloud`.
BaselineResult run_baseline(std::span<const OrbitFrame> frames, const SegmentedPointCloud& cloud, Encoder& encoder,
                            const RunConfig& config, std::size_t min_pixels = 25);

/// Tight crop of `image` around the mask pixels labelled `id`. Throws DataError if there are none.
Image crop_to_object(const Image& image, const ObjectMask& mask, ObjectId id);

}  // namespace vafs
