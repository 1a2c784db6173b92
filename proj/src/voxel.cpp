#include "vafs/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace vafs {

namespace {

void check_input(const ConceptCloud& raw, double voxel_size) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) throw DataError("voxel size must be positive");
  if (raw.empty()) throw DataError("cannot aggregate an empty concept cloud");
  for (std::size_t n = 0; n < raw.size(); ++n) {
    if (raw.points[n].feature.dim() != raw.feature_dim) {
      throw DataError("concept point " + std::to_string(n) + " has feature dimension " +
                      std::to_string(raw.points[n].feature.dim()) + ", expected " + std::to_string(raw.feature_dim));
    }
  }
}

// `members` ascending by input index.
ConceptPoint reduce(const ConceptCloud& raw, const std::vector<std::size_t>& members) {
  double sx = 0.0, sy = 0.0, sz = 0.0;
  std::vector<double> sum(raw.feature_dim, 0.0);
  std::optional<ObjectId> source = raw.points[members.front()].source_object;
  bool unanimous = true;
  for (std::size_t m : members) {
    const auto& p = raw.points[m];
    sx += p.position.x;
    sy += p.position.y;
    sz += p.position.z;
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += p.feature[d];
    if (p.source_object != source) unanimous = false;
  }
  const double n = static_cast<double>(members.size());
  ConceptPoint out;
  out.position = {sx / n, sy / n, sz / n};
  FeatureVector f(std::move(sum));
  if (members.size() == 1 && f.is_unit(1e-12))
    out.feature = std::move(f);
  else
    out.feature = f.norm() < 1e-9 ? raw.points[members.front()].feature : f.normalized();
  if (unanimous) out.source_object = source;
  return out;
}

}  // namespace

VoxelKey voxel_key(const Point3& p, double voxel_size) {
  return {static_cast<std::int64_t>(std::floor(p.x / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.y / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.z / voxel_size))};
}

ConceptCloud aggregate(const ConceptCloud& raw, double voxel_size) {
  check_input(raw, voxel_size);
  const auto n = static_cast<std::ptrdiff_t>(raw.size());

  std::vector<VoxelKey> keys(raw.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) keys[i] = voxel_key(raw.points[i].position, voxel_size);

  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] < keys[b] || (keys[a] == keys[b] && a < b);
  });

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < order.size(); ++s) {
    if (s == 0 || keys[order[s]] != keys[order[s - 1]]) starts.push_back(s);
  }
  starts.push_back(order.size());

  ConceptCloud out;
  out.feature_dim = raw.feature_dim;
  out.voxel_size = voxel_size;
  out.points.resize(starts.size() - 1);
  const auto groups = static_cast<std::ptrdiff_t>(out.points.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t g = 0; g < groups; ++g) {
    const std::vector<std::size_t> members(order.begin() + starts[g], order.begin() + starts[g + 1]);
    out.points[g] = reduce(raw, members);
  }
  return out;
}

namespace serial {

ConceptCloud aggregate(const ConceptCloud& raw, double voxel_size) {
  check_input(raw, voxel_size);
  std::map<VoxelKey, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < raw.size(); ++i) cells[voxel_key(raw.points[i].position, voxel_size)].push_back(i);

  ConceptCloud out;
  out.feature_dim = raw.feature_dim;
  out.voxel_size = voxel_size;
  out.points.reserve(cells.size());
  for (const auto& [key, members] : cells) out.points.push_back(reduce(raw, members));
  return out;
}

}  // namespace serial

}  // namespace vafs
