#pragma once

#include <span>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/kdtree.hpp"

namespace mash {

struct LossWeights {
  double fit = 1.0;
  double coverage = 0.5;
  double boundary = 0.0;
};

struct LossTerms {
  double fit = 0.0;
  double coverage = 0.0;
  double boundary = 0.0;
};

/// Mean distance from each point of `samples` to its nearest target.
double fitting_loss(std::span<const Vec3> samples, std::span<const Vec3> targets);
double fitting_loss(std::span<const Vec3> samples, const KdTree& targets);

/// Mean distance from each target to its nearest sample.
double coverage_loss(std::span<const Vec3> samples, std::span<const Vec3> targets);

/// Average over anchors of the mean distance from each boundary sample to the
/// union of the other anchors' boundary samples. Zero (with a warning) for a
/// single anchor.
double boundary_loss(std::span<const std::vector<Vec3>> boundary_sets);

double total_loss(const LossTerms& terms, const LossWeights& weights);

}  // namespace mash
