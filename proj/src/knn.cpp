#include "vafs/knn.hpp"

#include <algorithm>
#include <numeric>

namespace vafs {

namespace {

constexpr std::size_t kLeafSize = 12;

void offer(std::vector<Neighbor>& heap, std::size_t k, Neighbor cand) {
  // max-heap on `closer`: heap.front() is the current worst of the k best
  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end(), closer);
  } else if (closer(cand, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), closer);
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end(), closer);
  }
}

}  // namespace

KdTree::KdTree(std::span<const Eigen::Vector3d> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, points_.size());
  }
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = points_[order_[begin]], hi = lo;
  for (std::size_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(std::size_t node_id, const Eigen::Vector3d& q, std::size_t k, std::optional<std::size_t> exclude,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      if (exclude && *exclude == idx) continue;
      offer(heap, k, {idx, (points_[idx] - q).squaredNorm()});
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::size_t near = diff < 0.0 ? node.left : node.right;
  const std::size_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, k, exclude, heap);
  // <= keeps equal-distance candidates with lower indices reachable
  if (heap.size() < k || diff * diff <= heap.front().sq_distance) search(far, q, k, exclude, heap);
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d& query, std::size_t k,
                                  std::optional<std::size_t> exclude) const {
  std::vector<Neighbor> heap;
  if (k == 0 || points_.empty()) return heap;
  heap.reserve(k + 1);
  search(0, query, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

std::vector<std::vector<Neighbor>> knn_all(std::span<const Eigen::Vector3d> points, std::size_t k) {
  const KdTree tree(points);
  std::vector<std::vector<Neighbor>> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    out[ui] = tree.knn(points[ui], k, ui);
  }
  return out;
}

namespace serial {

std::vector<std::vector<Neighbor>> knn_all(std::span<const Eigen::Vector3d> points, std::size_t k) {
  std::vector<std::vector<Neighbor>> out(points.size());
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < points.size(); ++i) {
    all.clear();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j != i) all.push_back({j, (points[j] - points[i]).squaredNorm()});
    }
    const std::size_t kk = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(kk), all.end(), closer);
    out[i].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(kk));
  }
  return out;
}

}  // namespace serial

}  // namespace vafs
