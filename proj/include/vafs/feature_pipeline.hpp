#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>

#include "vafs/core.hpp"
#include "vafs/encoder.hpp"
#include "vafs/scene.hpp"

namespace vafs {

/// Raw (pre-fusion) unit embeddings of one timestep.
struct TimestepFeatures {
  std::map<ObjectId, FeatureVector> objects;
  FeatureVector global;
  friend bool operator==(const TimestepFeatures&, const TimestepFeatures&) = default;
};

/// Blends an object feature with the global feature. Importance w = (1 - cos(e_o, e_g)) / 2;
/// result = normalize(w * e_o + (1 - w) * e_g), or e_o when that blend vanishes.
/// Throws DataError on a dimension mismatch.
FeatureVector fuse_object_feature(const FeatureVector& object_feature, const FeatureVector& global_feature);

/// Broadcasts each object's fused feature onto its points. Throws DataError if an object is missing.
ConceptCloud build_concept_update(const SegmentedPointCloud& cloud, const std::map<ObjectId, FeatureVector>& fused,
                                  std::size_t feature_dim);

/// Cache carried from one timestep to the next.
struct PipelineState {
  SegmentedPointCloud cloud;
  TimestepFeatures raw;
  std::map<ObjectId, FeatureVector> fused;
};

struct StageTimings {
  double feature_2d_seconds = 0.0;  // view synthesis + embedding
  double fusion_3d_seconds = 0.0;   // fusion, concept update, aggregation
};

struct TimestepResult {
  ConceptCloud raw_cloud;  // before voxel aggregation
  TimestepFeatures features;
  std::size_t encoder_calls = 0;
  ChangeSet changed;
  PipelineState state;
  StageTimings timings;
};

struct PipelineOptions {
  /// When set, every rendered view is written there as view_t{step}_obj{id}.png / view_t{step}_global.png.
  std::optional<std::filesystem::path> dump_views_dir;
};

/// One mapping step. Without a previous state every object view and the global view are embedded
/// (|objects| + 1 calls). Otherwise only changed objects are re-embedded, plus one global view when
/// anything changed or disappeared; unchanged objects reuse cached raw embeddings, and all objects
/// are re-fused whenever the global feature changes.
TimestepResult process_timestep(const PipelineState* prev, const SegmentedPointCloud& cloud, Encoder& encoder,
                                const RunConfig& config, const PipelineOptions& options = {});

}  // namespace vafs
