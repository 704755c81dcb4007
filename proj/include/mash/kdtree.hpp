#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

#include "mash/geometry.hpp"

namespace mash {

/// Static 3-d tree for exact nearest-neighbour queries. Equal distances are
/// resolved towards the lowest original point index.
class KdTree {
 public:
  struct Hit {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    double dist2 = std::numeric_limits<double>::infinity();

    bool valid() const { return index != std::numeric_limits<std::size_t>::max(); }
  };

  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points) { build(points); }

  void build(std::span<const Vec3> points) {
    points_.assign(points.begin(), points.end());
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.clear();
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 2);
      build_node(0, static_cast<std::uint32_t>(points_.size()));
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  Hit nearest(const Vec3& q) const {
    return nearest_if(q, [](std::size_t) { return true; });
  }

  /// Nearest point among those for which accept(index) is true.
  template <class Accept>
  Hit nearest_if(const Vec3& q, Accept&& accept) const {
    Hit best;
    if (!nodes_.empty()) search_nearest(0, q, accept, best);
    return best;
  }

  /// k nearest points, ordered by (distance, index).
  std::vector<Hit> knn(const Vec3& q, std::size_t k) const {
    std::vector<Hit> heap;  // max-heap on (dist2, index)
    if (k == 0 || nodes_.empty()) return heap;
    heap.reserve(k + 1);
    search_knn(0, q, k, heap);
    std::sort_heap(heap.begin(), heap.end(), hit_less);
    return heap;
  }

 private:
  static constexpr std::uint32_t kLeafSize = 8;

  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int dim = 0;
    double split = 0.0;
  };

  static bool hit_less(const Hit& a, const Hit& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }

  std::int32_t build_node(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end, -1, -1, 0, 0.0});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int dim = 0;
    (hi - lo).maxCoeff(&dim);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double pa = points_[a][dim];
                       const double pb = points_[b][dim];
                       return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][dim];
    const std::int32_t left = build_node(begin, mid);
    const std::int32_t right = build_node(mid, end);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.dim = dim;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  template <class Accept>
  void search_nearest(std::int32_t id, const Vec3& q, Accept& accept, Hit& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        if ((d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) && accept(idx)) {
          best = {idx, d2};
        }
      }
      return;
    }
    const double diff = q[node.dim] - node.split;
    const std::int32_t first = diff < 0.0 ? node.left : node.right;
    const std::int32_t second = diff < 0.0 ? node.right : node.left;
    search_nearest(first, q, accept, best);
    if (diff * diff <= best.dist2) search_nearest(second, q, accept, best);
  }

  void search_knn(std::int32_t id, const Vec3& q, std::size_t k, std::vector<Hit>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Hit h{order_[i], (points_[order_[i]] - q).squaredNorm()};
        if (heap.size() < k) {
          heap.push_back(h);
          std::push_heap(heap.begin(), heap.end(), hit_less);
        } else if (hit_less(h, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), hit_less);
          heap.back() = h;
          std::push_heap(heap.begin(), heap.end(), hit_less);
        }
      }
      return;
    }
    const double diff = q[node.dim] - node.split;
    const std::int32_t first = diff < 0.0 ? node.left : node.right;
    const std::int32_t second = diff < 0.0 ? node.right : node.left;
    search_knn(first, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().dist2) search_knn(second, q, k, heap);
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace mash
