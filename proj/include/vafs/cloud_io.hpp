#pragma once

#include <filesystem>

#include "vafs/core.hpp"
#include "vafs/ply.hpp"

namespace vafs {

/// Frame PLY: vertex x,y,z (float), red,green,blue (uchar), object_id (uint).
/// A "timestep N" header comment, when present, sets the cloud's timestep.
SegmentedPointCloud read_frame(const std::filesystem::path& path);
void write_frame(const SegmentedPointCloud& cloud, const std::filesystem::path& path,
                 ply::Format format = ply::Format::kBinaryLittleEndian);

struct ConceptCloudFile {
  ConceptCloud cloud;
  LabelMap labels;
};

/// Concept-cloud PLY: binary little-endian, double x,y,z, uint source_object, uchar source_valid,
/// double f0..f{N-1}. Feature dimension, voxel size and labels travel as header comments.
ConceptCloudFile read_concept_cloud(const std::filesystem::path& path);
void write_concept_cloud(const ConceptCloud& cloud, const LabelMap& labels, const std::filesystem::path& path);

}  // namespace vafs
