#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vafs/core.hpp"

namespace vafs {

struct RelevancyResult {
  std::vector<double> raw;         // cosine(feature, query) per point
  std::vector<double> normalized;  // min-max scaled to [0,1]; 0.5 everywhere when max == min
  std::vector<std::size_t> mask;   // ascending point indices
  std::string query;
  std::optional<double> iou;
};

/// Scores every point against `query`. OpenMP over points.
/// Throws DataError on an empty cloud or a dimension mismatch.
RelevancyResult relevancy(const ConceptCloud& cloud, const FeatureVector& query);

namespace serial {
RelevancyResult relevancy(const ConceptCloud& cloud, const FeatureVector& query);
}  // namespace serial

/// Indices whose normalized score is >= threshold.
std::vector<std::size_t> threshold_mask(const RelevancyResult& result, double threshold);

/// |mask & target| / |mask | target| over the cloud's points, target = points whose source_object is
/// `target`. Points without a source object count only toward the union.
/// Throws DataError if no point belongs to `target`.
double iou(std::span<const std::size_t> mask, ObjectId target, const ConceptCloud& cloud);

/// Blue (0) to red (1) linear colormap: (round(255 s), 0, round(255 (1 - s))).
Rgb8 relevancy_color(double normalized_score);

/// Binary PLY with float x,y,z and uchar red,green,blue from relevancy_color.
void export_relevancy(const ConceptCloud& cloud, const RelevancyResult& result, const std::filesystem::path& path);

}  // namespace vafs
