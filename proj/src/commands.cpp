#include "vafs/commands.hpp"

#include <chrono>
#include <cstdio>
#include <optional>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vafs/baseline.hpp"
#include "vafs/cloud_io.hpp"
#include "vafs/voxel.hpp"

namespace vafs {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

nlohmann::json MapReport::to_json() const {
  return {{"encoder_calls", encoder_calls},
          {"calls_per_step", calls_per_step},
          {"per_stage_seconds", {{"feature_2d", seconds.feature_2d_seconds}, {"fusion_3d", seconds.fusion_3d_seconds}}},
          {"points_in", points_in},
          {"voxels_out", voxels_out}};
}

MapReport run_map(const SceneManifest& manifest, const RunConfig& config, Encoder& encoder, const fs::path& out,
                  const PipelineOptions& options) {
  config.validate();
  if (manifest.frames.empty()) throw DataError("manifest lists no frames");
  MapReport report;
  std::optional<PipelineState> state;
  ConceptCloud final_cloud;
  for (const auto& path : manifest.frames) {
    const auto cloud = read_frame(path);
    auto step = process_timestep(state ? &*state : nullptr, cloud, encoder, config, options);
    const auto t0 = std::chrono::steady_clock::now();
    final_cloud = aggregate(step.raw_cloud, config.voxel_size);
    step.timings.fusion_3d_seconds += seconds_since(t0);

    report.encoder_calls += step.encoder_calls;
    report.calls_per_step.push_back(step.encoder_calls);
    report.seconds.feature_2d_seconds += step.timings.feature_2d_seconds;
    report.seconds.fusion_3d_seconds += step.timings.fusion_3d_seconds;
    report.points_in = step.raw_cloud.size();
    report.voxels_out = final_cloud.size();
    spdlog::info("step {} ({}): {} encoder call(s), {} voxel(s)", cloud.timestep, path.filename().string(),
                 step.encoder_calls, final_cloud.size());
    state = std::move(step.state);
  }
  write_concept_cloud(final_cloud, manifest.labels, out);
  return report;
}

nlohmann::json QueryReport::to_json() const {
  nlohmann::json j = {{"query", result.query},
                      {"points", result.raw.size()},
                      {"mask_size", result.mask.size()},
                      {"mask", result.mask}};
  if (!result.raw.empty()) {
    const auto [lo, hi] = std::minmax_element(result.raw.begin(), result.raw.end());
    j["raw_min"] = *lo;
    j["raw_max"] = *hi;
  }
  if (target) j["target"] = *target;
  if (result.iou) j["iou"] = *result.iou;
  return j;
}

ObjectId resolve_target(const std::string& target, const LabelMap& labels) {
  for (const auto& [id, label] : labels) {
    if (label == target) return id;
  }
  if (!target.empty() && target.find_first_not_of("0123456789") == std::string::npos) {
    try {
      const unsigned long long v = std::stoull(target);
      if (v <= 0xFFFFFFFFull) return static_cast<ObjectId>(v);
    } catch (const std::out_of_range&) {
    }
  }
  throw DataError("unknown target '" + target + "' (not a label in the cloud and not an object id)");
}

QueryReport run_query(const ConceptCloudFile& file, const std::string& text, Encoder& encoder, double threshold,
                      const std::optional<std::string>& target, const std::optional<fs::path>& out) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw DataError("threshold must lie in [0, 1]");
  if (file.cloud.empty()) throw DataError("cannot query an empty concept cloud");
  QueryReport report;
  if (target) report.target = resolve_target(*target, file.labels);
  const auto q = encoder.embed_text(text);
  report.result = relevancy(file.cloud, q);
  report.result.query = text;
  report.result.mask = threshold_mask(report.result, threshold);
  if (report.target) report.result.iou = iou(report.result.mask, *report.target, file.cloud);
  if (out) export_relevancy(file.cloud, report.result, *out);
  return report;
}

double BenchReport::call_ratio() const {
  return vafs.encoder_calls == 0 ? 0.0 : static_cast<double>(baseline.encoder_calls) / vafs.encoder_calls;
}

double BenchReport::time_ratio() const { return vafs.wall_seconds > 0.0 ? baseline.wall_seconds / vafs.wall_seconds : 0.0; }

nlohmann::json BenchReport::to_json() const {
  auto side = [](const BenchSide& s) {
    return nlohmann::json{{"encoder_calls", s.encoder_calls},
                          {"wall_seconds", s.wall_seconds},
                          {"per_stage_seconds",
                           {{"feature_2d", s.stages.feature_2d_seconds}, {"fusion_3d", s.stages.fusion_3d_seconds}}},
                          {"voxels_out", s.voxels_out}};
  };
  return {{"objects", objects},
          {"frames", frames},
          {"latency_ms", latency_ms},
          {"concurrency", concurrency},
          {"vafs", side(vafs)},
          {"baseline", side(baseline)},
          {"frame_render_seconds", frame_render_seconds},
          {"call_ratio", call_ratio()},
          {"time_ratio", time_ratio()}};
}

std::string BenchReport::table() const {
  std::string s = fmt::format("objects {}  frames {}  latency {} ms  concurrency {}\n", objects, frames, latency_ms,
                              concurrency);
  s += fmt::format("{:<10}{:>10}{:>14}{:>14}{:>14}\n", "method", "calls", "2d [s]", "3d [s]", "total [s]");
  auto row = [&](const char* name, const BenchSide& b) {
    s += fmt::format("{:<10}{:>10}{:>14.3f}{:>14.3f}{:>14.3f}\n", name, b.encoder_calls, b.stages.feature_2d_seconds,
                     b.stages.fusion_3d_seconds, b.wall_seconds);
  };
  row("baseline", baseline);
  row("vafs", vafs);
  s += fmt::format("ratio     {:>10.2f}{:>42.2f}\n", call_ratio(), time_ratio());
  return s;
}

BenchReport run_bench(const SceneSpec& spec, std::uint64_t seed, const RunConfig& config, const BenchOptions& options) {
  config.validate();
  if (options.frames == 0) throw DataError("bench needs at least one frame");
  const auto frames = generate_scene(spec, seed);
  const auto& cloud = frames.front();
  const auto latency = std::chrono::microseconds(static_cast<std::int64_t>(options.latency_ms * 1000.0));

  BenchReport report;
  report.objects = cloud.object_ids().size();
  report.frames = options.frames;
  report.latency_ms = options.latency_ms;
  report.concurrency = options.concurrency;

  {
    MockEncoder encoder(options.dim, latency, options.concurrency);
    const auto t0 = std::chrono::steady_clock::now();
    auto step = process_timestep(nullptr, cloud, encoder, config);
    const auto t1 = std::chrono::steady_clock::now();
    const auto voxels = aggregate(step.raw_cloud, config.voxel_size);
    report.vafs.wall_seconds = seconds_since(t0);
    report.vafs.stages = step.timings;
    report.vafs.stages.fusion_3d_seconds += seconds_since(t1);
    report.vafs.encoder_calls = step.encoder_calls;
    report.vafs.voxels_out = voxels.size();
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto orbit = generate_orbit_frames(cloud, options.frames, OrbitParams::from(config));
    report.frame_render_seconds = seconds_since(t0);

    MockEncoder encoder(options.dim, latency, options.concurrency);
    const auto t1 = std::chrono::steady_clock::now();
    const auto base = run_baseline(orbit, cloud, encoder, config);
    report.baseline.wall_seconds = seconds_since(t1);
    report.baseline.stages = base.timings;
    report.baseline.encoder_calls = base.encoder_calls;
    report.baseline.voxels_out = base.cloud.size();
  }
  return report;
}

fs::path run_gen_scene(const SceneSpec& spec, std::uint64_t seed, const fs::path& out_dir) {
  spec.validate();
  const auto clouds = generate_scene(spec, seed);
  fs::create_directories(out_dir);
  SceneManifest manifest;
  manifest.labels = spec.labels();
  for (const auto& cloud : clouds) {
    const auto name = fmt::format("frame_{:04d}.ply", cloud.timestep);
    write_frame(cloud, out_dir / name);
    manifest.frames.push_back(out_dir / name);
  }
  const auto path = out_dir / "manifest.json";
  write_manifest(manifest, path);
  return path;
}

}  // namespace vafs
