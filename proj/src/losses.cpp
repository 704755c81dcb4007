#include "mash/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "mash/log.hpp"

namespace mash {

double fitting_loss(std::span<const Vec3> samples, const KdTree& targets) {
  if (samples.empty() || targets.empty()) throw std::invalid_argument("empty point set");
  double sum = 0.0;
  for (const Vec3& p : samples) sum += std::sqrt(targets.nearest(p).dist2);
  return sum / static_cast<double>(samples.size());
}

double fitting_loss(std::span<const Vec3> samples, std::span<const Vec3> targets) {
  if (samples.empty() || targets.empty()) throw std::invalid_argument("empty point set");
  return fitting_loss(samples, KdTree(targets));
}

double coverage_loss(std::span<const Vec3> samples, std::span<const Vec3> targets) {
  return fitting_loss(targets, samples);
}

double boundary_loss(std::span<const std::vector<Vec3>> boundary_sets) {
  if (boundary_sets.size() < 2) {
    log_warning("boundary loss needs at least two anchors; returning 0");
    return 0.0;
  }
  std::vector<Vec3> all;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < boundary_sets.size(); ++i) {
    if (boundary_sets[i].empty()) throw std::invalid_argument("empty point set");
    all.insert(all.end(), boundary_sets[i].begin(), boundary_sets[i].end());
    owner.insert(owner.end(), boundary_sets[i].size(), i);
  }
  const KdTree tree(all);
  double total = 0.0;
  for (std::size_t i = 0; i < boundary_sets.size(); ++i) {
    double sum = 0.0;
    for (const Vec3& p : boundary_sets[i]) {
      const auto hit = tree.nearest_if(p, [&](std::size_t j) { return owner[j] != i; });
      sum += std::sqrt(hit.dist2);
    }
    total += sum / static_cast<double>(boundary_sets[i].size());
  }
  return total / static_cast<double>(boundary_sets.size());
}

double total_loss(const LossTerms& terms, const LossWeights& weights) {
  return weights.fit * terms.fit + weights.coverage * terms.coverage +
         weights.boundary * terms.boundary;
}

}  // namespace mash
