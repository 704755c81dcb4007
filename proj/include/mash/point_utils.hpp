#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/kdtree.hpp"

namespace mash {

/// Greedy farthest point sampling starting from `first`. Returns indices.
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t count,
                                                 std::size_t first);

/// Mean distance from each point to its nearest other point.
double mean_nn_spacing(std::span<const Vec3> points);
double mean_nn_spacing(std::span<const Vec3> points, const KdTree& tree);

/// PCA normal over the k nearest neighbours (the point included), signed to
/// point away from the neighbourhood centroid. When the centroid offset is
/// too small to decide (flat sampling), the sign points away from `fallback_center`.
Vec3 estimate_normal(std::span<const Vec3> points, const KdTree& tree, std::size_t index,
                     std::size_t k, const Vec3& fallback_center);

Vec3 centroid(std::span<const Vec3> points);

}  // namespace mash
