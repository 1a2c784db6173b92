#include "vafs/query.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vafs/ply.hpp"

namespace vafs {

namespace {

void check_input(const ConceptCloud& cloud, const FeatureVector& query) {
  if (cloud.empty()) throw DataError("cannot query an empty concept cloud");
  if (query.dim() != cloud.feature_dim) {
    throw DataError("query dimension " + std::to_string(query.dim()) + " does not match cloud dimension " +
                    std::to_string(cloud.feature_dim));
  }
}

void normalize_scores(RelevancyResult& r) {
  const auto [lo, hi] = std::minmax_element(r.raw.begin(), r.raw.end());
  const double min = *lo, max = *hi;
  r.normalized.resize(r.raw.size());
  for (std::size_t i = 0; i < r.raw.size(); ++i) r.normalized[i] = max == min ? 0.5 : (r.raw[i] - min) / (max - min);
}

}  // namespace

RelevancyResult relevancy(const ConceptCloud& cloud, const FeatureVector& query) {
  check_input(cloud, query);
  RelevancyResult r;
  r.raw.resize(cloud.size());
  const auto n = static_cast<std::ptrdiff_t>(cloud.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) r.raw[i] = cosine(cloud.points[i].feature, query);
  normalize_scores(r);
  return r;
}

namespace serial {

RelevancyResult relevancy(const ConceptCloud& cloud, const FeatureVector& query) {
  check_input(cloud, query);
  RelevancyResult r;
  r.raw.reserve(cloud.size());
  for (const auto& p : cloud.points) r.raw.push_back(cosine(p.feature, query));
  normalize_scores(r);
  return r;
}

}  // namespace serial

std::vector<std::size_t> threshold_mask(const RelevancyResult& result, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < result.normalized.size(); ++i) {
    if (result.normalized[i] >= threshold) out.push_back(i);
  }
  return out;
}

double iou(std::span<const std::size_t> mask, ObjectId target, const ConceptCloud& cloud) {
  std::set<std::size_t> target_points;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.points[i].source_object == target) target_points.insert(i);
  }
  if (target_points.empty()) throw DataError("target object " + std::to_string(target) + " is absent from the cloud");
  const std::set<std::size_t> selected(mask.begin(), mask.end());
  for (std::size_t i : selected) {
    if (i >= cloud.size()) throw DataError("mask index " + std::to_string(i) + " is out of range");
  }
  std::size_t inter = 0;
  for (std::size_t i : selected) inter += target_points.count(i);
  const std::size_t uni = selected.size() + target_points.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Rgb8 relevancy_color(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return {static_cast<std::uint8_t>(std::lround(255.0 * s)), 0, static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - s)))};
}

void export_relevancy(const ConceptCloud& cloud, const RelevancyResult& result, const std::filesystem::path& path) {
  if (result.normalized.size() != cloud.size()) throw DataError("relevancy result does not match the cloud");
  std::vector<Rgb8> colors(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) colors[i] = relevancy_color(result.normalized[i]);
  const std::vector<ply::Column> cols = {{"x", ply::Type::kFloat32},   {"y", ply::Type::kFloat32},
                                         {"z", ply::Type::kFloat32},   {"red", ply::Type::kUInt8},
                                         {"green", ply::Type::kUInt8}, {"blue", ply::Type::kUInt8}};
  std::vector<std::string> comments;
  if (!result.query.empty()) {
    std::string q = result.query;
    std::replace_if(q.begin(), q.end(), [](char ch) { return ch == '\n' || ch == '\r'; }, ' ');
    comments.push_back("query " + q);
  }
  ply::write(path, ply::Format::kBinaryLittleEndian, comments, cols, cloud.size(),
             [&](std::size_t r, std::size_t c) -> double {
               const auto& p = cloud.points[r].position;
               switch (c) {
                 case 0: return p.x;
                 case 1: return p.y;
                 case 2: return p.z;
                 case 3: return colors[r].r;
                 case 4: return colors[r].g;
                 default: return colors[r].b;
               }
             });
}

}  // namespace vafs
