#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vafs/cloud_io.hpp"
#include "vafs/core.hpp"
#include "vafs/encoder.hpp"
#include "vafs/feature_pipeline.hpp"
#include "vafs/query.hpp"
#include "vafs/scene.hpp"

namespace vafs {

struct MapReport {
  std::size_t encoder_calls = 0;
  std::vector<std::size_t> calls_per_step;
  StageTimings seconds;
  std::size_t points_in = 0;   // raw points of the last step
  std::size_t voxels_out = 0;  // points of the written concept cloud

  /// {encoder_calls, calls_per_step, per_stage_seconds{feature_2d, fusion_3d}, points_in, voxels_out}
  nlohmann::json to_json() const;
};

/// Runs every manifest frame through process_timestep + aggregate and writes the last step's
/// concept cloud (with the manifest labels) to `out`.
MapReport run_map(const SceneManifest& manifest, const RunConfig& config, Encoder& encoder,
                  const std::filesystem::path& out, const PipelineOptions& options = {});

struct QueryReport {
  RelevancyResult result;
  std::optional<ObjectId> target;
  nlohmann::json to_json() const;
};

/// Resolves a label or a decimal object id against the label map. Throws DataError if neither matches.
ObjectId resolve_target(const std::string& target, const LabelMap& labels);

/// Embeds `text`, scores the cloud, thresholds, optionally scores IoU against `target`, and
/// writes the coloured relevancy PLY to `out` when given.
QueryReport run_query(const ConceptCloudFile& file, const std::string& text, Encoder& encoder, double threshold,
                      const std::optional<std::string>& target, const std::optional<std::filesystem::path>& out);

struct BenchSide {
  std::size_t encoder_calls = 0;
  double wall_seconds = 0.0;
  StageTimings stages;
  std::size_t voxels_out = 0;
};

struct BenchReport {
  std::size_t objects = 0;
  std::size_t frames = 0;
  double latency_ms = 0.0;
  std::size_t concurrency = 1;
  BenchSide vafs;
  BenchSide baseline;
  double frame_render_seconds = 0.0;  // producing the baseline's input stream, not counted in its wall time

  double call_ratio() const;
  double time_ratio() const;
  nlohmann::json to_json() const;
  std::string table() const;
};

struct BenchOptions {
  std::size_t frames = 236;
  double latency_ms = 50.0;
  std::size_t concurrency = 4;
  std::size_t dim = 64;
};

/// Timestep 0 of the scene through VAFS (process_timestep + aggregate) and through the per-frame
/// baseline over orbit frames, each with its own fixed-latency mock encoder.
BenchReport run_bench(const SceneSpec& spec, std::uint64_t seed, const RunConfig& config, const BenchOptions& options);

/// Writes frame_0000.ply ... and manifest.json into `out_dir`; returns the manifest path.
std::filesystem::path run_gen_scene(const SceneSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace vafs
