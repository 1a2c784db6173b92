#pragma once

#include <compare>
#include <cstdint>

#include "vafs/core.hpp"

namespace vafs {

struct VoxelKey {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

/// Componentwise floor(p / voxel_size); boundary coordinates belong to the higher cell.
VoxelKey voxel_key(const Point3& p, double voxel_size);

/// One output point per occupied voxel, sorted by key: the centroid of the members, the
/// L2-normalised feature sum (members summed in ascending input index, falling back to the
/// lowest-index member's feature when the sum vanishes), and the source object when the members
/// agree. Throws DataError on empty input, voxel_size <= 0 or mismatched feature dimensions.
/// Keys are computed in parallel, points grouped by a (key, index) sort, groups reduced in parallel.
ConceptCloud aggregate(const ConceptCloud& raw, double voxel_size);

namespace serial {
/// std::map group-by reference for aggregate().
ConceptCloud aggregate(const ConceptCloud& raw, double voxel_size);
}  // namespace serial

}  // namespace vafs
