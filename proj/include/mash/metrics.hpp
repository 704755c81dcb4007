#pragma once

#include <span>

#include "mash/geometry.hpp"

namespace mash {

inline constexpr double kDefaultFscoreTau = 0.01;

/// Symmetric L1 Chamfer distance: (mean_a d(a,B) + mean_b d(b,A)) / 2.
double chamfer_l1(std::span<const Vec3> a, std::span<const Vec3> b);
/// Same with squared distances.
double chamfer_l2(std::span<const Vec3> a, std::span<const Vec3> b);

/// Harmonic mean of precision (A within tau of B) and recall (B within tau of A).
double fscore(std::span<const Vec3> a, std::span<const Vec3> b, double tau = kDefaultFscoreTau);

double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);

/// Mean |cos| between each point's normal and its nearest neighbour's normal
/// in the other set, averaged over both directions.
double normal_cosine(std::span<const Vec3> a, std::span<const Vec3> a_normals,
                     std::span<const Vec3> b, std::span<const Vec3> b_normals);

}  // namespace mash
