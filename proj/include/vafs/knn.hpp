#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace vafs {

struct Neighbor {
  std::size_t index = 0;
  double sq_distance = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Neighbours are ordered by (squared distance, index); equal distances resolve to the lower index,
/// so the KD-tree and the brute-force reference return identical lists.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.index < b.index);
}

/// Static 3-D KD-tree over a copy of the input points.
class KdTree {
 public:
  explicit KdTree(std::span<const Eigen::Vector3d> points);

  std::size_t size() const { return points_.size(); }

  /// The k nearest points to `query`, skipping index `exclude` when given. Sorted by `closer`.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k,
                            std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void search(std::size_t node, const Eigen::Vector3d& q, std::size_t k, std::optional<std::size_t> exclude,
              std::vector<Neighbor>& heap) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// For every point, its k nearest other points (query excluded). OpenMP over queries.
std::vector<std::vector<Neighbor>> knn_all(std::span<const Eigen::Vector3d> points, std::size_t k);

namespace serial {
/// O(n^2) reference for knn_all.
std::vector<std::vector<Neighbor>> knn_all(std::span<const Eigen::Vector3d> points, std::size_t k);
}  // namespace serial

}  // namespace vafs
