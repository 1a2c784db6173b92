#include "vafs/feature_pipeline.hpp"

#include <chrono>
#include <exception>
#include <vector>

#include <spdlog/spdlog.h>

#include "vafs/image_io.hpp"
#include "vafs/view_synthesis.hpp"

namespace vafs {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

FeatureVector fuse_object_feature(const FeatureVector& object_feature, const FeatureVector& global_feature) {
  require_same_dim(object_feature, global_feature, "fuse_object_feature");
  const double w = (1.0 - cosine(object_feature, global_feature)) / 2.0;
  std::vector<double> blend(object_feature.dim());
  for (std::size_t i = 0; i < blend.size(); ++i) blend[i] = w * object_feature[i] + (1.0 - w) * global_feature[i];
  FeatureVector c(std::move(blend));
  if (!(c.norm() >= 1e-9)) return object_feature;
  return c.normalized();
}

ConceptCloud build_concept_update(const SegmentedPointCloud& cloud, const std::map<ObjectId, FeatureVector>& fused,
                                  std::size_t feature_dim) {
  ConceptCloud out;
  out.feature_dim = feature_dim;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    const auto it = fused.find(p.object_id);
    if (it == fused.end()) throw DataError("no fused feature for object " + std::to_string(p.object_id));
    if (it->second.dim() != feature_dim) throw DataError("fused feature dimension mismatch for object " + std::to_string(p.object_id));
    out.points.push_back({p.position, it->second, p.object_id});
  }
  return out;
}

TimestepResult process_timestep(const PipelineState* prev, const SegmentedPointCloud& cloud, Encoder& encoder,
                                const RunConfig& config, const PipelineOptions& options) {
  require_valid(cloud, "process_timestep");
  if (cloud.empty()) throw DataError("process_timestep: empty cloud");
  const auto t0 = std::chrono::steady_clock::now();

  TimestepResult result;
  const auto ids = cloud.object_ids();
  bool need_global = true;
  if (prev) {
    result.changed = detect_changed_objects(prev->cloud, cloud, config.change_epsilon);
    const auto gone = removed_objects(prev->cloud, cloud);
    need_global = !result.changed.empty() || !gone.empty();
  } else {
    result.changed.insert(ids.begin(), ids.end());
  }

  // Synthesize the views to embed: changed objects in ascending id order, then the global view.
  const std::vector<ObjectId> to_embed(result.changed.begin(), result.changed.end());
  std::vector<Image> views(to_embed.size() + (need_global ? 1 : 0));
  std::vector<std::exception_ptr> errors(views.size());
  const auto n_views = static_cast<std::ptrdiff_t>(views.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n_views; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    try {
      views[ui] = ui < to_embed.size() ? synthesize_object_view(cloud, to_embed[ui], config)
                                       : synthesize_global_view(cloud, config);
    } catch (...) {
      errors[ui] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  if (options.dump_views_dir) {
    const auto step = std::to_string(cloud.timestep);
    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto name = i < to_embed.size() ? "view_t" + step + "_obj" + std::to_string(to_embed[i]) + ".png"
                                            : "view_t" + step + "_global.png";
      write_png(views[i], *options.dump_views_dir / name);
    }
  }

  const auto embeddings = encoder.embed_images(views);
  result.encoder_calls = embeddings.size();

  // Raw features: cached entries for objects still present, overwritten by fresh embeddings.
  if (prev) {
    for (ObjectId id : ids) {
      const auto it = prev->raw.objects.find(id);
      if (it != prev->raw.objects.end()) result.features.objects.emplace(id, it->second);
    }
    result.features.global = prev->raw.global;
  }
  for (std::size_t i = 0; i < to_embed.size(); ++i) result.features.objects.insert_or_assign(to_embed[i], embeddings[i]);
  if (need_global) result.features.global = embeddings.back();
  result.timings.feature_2d_seconds = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  std::map<ObjectId, FeatureVector> fused;
  if (need_global || !prev) {
    for (const auto& [id, e] : result.features.objects) fused.emplace(id, fuse_object_feature(e, result.features.global));
  } else {
    fused = prev->fused;
  }
  result.raw_cloud = build_concept_update(cloud, fused, encoder.dimension());
  result.timings.fusion_3d_seconds = seconds_since(t1);

  spdlog::debug("timestep {}: {} changed object(s), {} encoder call(s)", cloud.timestep, result.changed.size(),
                result.encoder_calls);
  result.state = PipelineState{cloud, result.features, std::move(fused)};
  return result;
}

}  // namespace vafs
