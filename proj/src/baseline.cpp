#include "vafs/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <vector>

#include "vafs/voxel.hpp"

namespace vafs {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void accumulate(std::vector<double>& sum, const FeatureVector& f) {
  if (sum.empty()) sum.assign(f.dim(), 0.0);
  for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += f[d];
}

}  // namespace

Image crop_to_object(const Image& image, const ObjectMask& mask, ObjectId id) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) != static_cast<std::int64_t>(id)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw DataError("object " + std::to_string(id) + " is not visible in the mask");
  Image out(x1 - x0 + 1, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) out.set(x - x0, y - y0, image.at(x, y));
  }
  return out;
}

BaselineResult run_baseline(std::span<const OrbitFrame> frames, const SegmentedPointCloud& cloud, Encoder& encoder,
                            const RunConfig& config, std::size_t min_pixels) {
  if (frames.empty()) throw DataError("baseline needs at least one frame");
  require_valid(cloud, "run_baseline");
  const auto ids = cloud.object_ids();
  const std::set<ObjectId> known(ids.begin(), ids.end());

  BaselineResult result;
  std::map<ObjectId, std::vector<double>> sums;
  std::vector<double> global_sum;
  FeatureVector first_global;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& frame = frames[f];
    const auto& mask = frame.mask;
    if (mask.width != frame.image.width || mask.height != frame.image.height ||
        mask.ids.size() != static_cast<std::size_t>(mask.width) * mask.height) {
      throw DataError("frame " + std::to_string(f) + ": mask does not match the image");
    }
    std::map<std::int64_t, std::size_t> counts;
    for (std::int64_t v : mask.ids) {
      if (v != kNoObject) ++counts[v];
    }
    std::vector<ObjectId> visible;
    for (const auto& [id, count] : counts) {
      if (id < 0 || !known.count(static_cast<ObjectId>(id))) {
        throw DataError("frame " + std::to_string(f) + ": mask id " + std::to_string(id) + " is absent from the cloud");
      }
      if (count >= min_pixels) visible.push_back(static_cast<ObjectId>(id));
    }

    std::vector<Image> batch;
    batch.reserve(visible.size() + 1);
    batch.push_back(frame.image);
    for (ObjectId id : visible) batch.push_back(crop_to_object(frame.image, mask, id));

    const auto embeddings = encoder.embed_images(batch);
    result.encoder_calls += embeddings.size();

    if (f == 0) first_global = embeddings.front();
    accumulate(global_sum, embeddings.front());
    for (std::size_t v = 0; v < visible.size(); ++v) {
      accumulate(sums[visible[v]], fuse_object_feature(embeddings[v + 1], embeddings.front()));
    }
  }

  FeatureVector global_mean(global_sum);
  global_mean = global_mean.norm() < 1e-9 ? first_global : global_mean.normalized();
  std::map<ObjectId, FeatureVector> features;
  for (ObjectId id : ids) {
    const auto it = sums.find(id);
    FeatureVector f = it == sums.end() ? FeatureVector{} : FeatureVector(it->second);
    features.emplace(id, f.empty() || f.norm() < 1e-9 ? global_mean : f.normalized());
  }
  result.timings.feature_2d_seconds = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  result.cloud = aggregate(build_concept_update(cloud, features, encoder.dimension()), config.voxel_size);
  result.timings.fusion_3d_seconds = seconds_since(t1);
  return result;
}

}  // namespace vafs
