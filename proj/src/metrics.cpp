#include "mash/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mash/kdtree.hpp"
#include "mash/parallel.hpp"

namespace mash {
namespace {

void require_non_empty(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty point set");
}

// Nearest-neighbour hit in `to` for every point of `from`.
std::vector<KdTree::Hit> nearest_all(std::span<const Vec3> from, std::span<const Vec3> to) {
  const KdTree tree(to);
  std::vector<KdTree::Hit> hits(from.size());
  parallel_for(from.size(), [&](std::size_t i) { hits[i] = tree.nearest(from[i]); });
  return hits;
}

template <class F>
double mean_of(const std::vector<KdTree::Hit>& hits, F f) {
  double sum = 0.0;
  for (const auto& h : hits) sum += f(h);
  return sum / static_cast<double>(hits.size());
}

}  // namespace

double chamfer_l1(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_non_empty(a, b);
  auto dist = [](const KdTree::Hit& h) { return std::sqrt(h.dist2); };
  return 0.5 * (mean_of(nearest_all(a, b), dist) + mean_of(nearest_all(b, a), dist));
}

double chamfer_l2(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_non_empty(a, b);
  auto dist2 = [](const KdTree::Hit& h) { return h.dist2; };
  return 0.5 * (mean_of(nearest_all(a, b), dist2) + mean_of(nearest_all(b, a), dist2));
}

double fscore(std::span<const Vec3> a, std::span<const Vec3> b, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("fscore: tau must be positive");
  require_non_empty(a, b);
  auto within = [tau](const KdTree::Hit& h) { return std::sqrt(h.dist2) < tau ? 1.0 : 0.0; };
  const double precision = mean_of(nearest_all(a, b), within);
  const double recall = mean_of(nearest_all(b, a), within);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_non_empty(a, b);
  double worst = 0.0;
  for (const auto& h : nearest_all(a, b)) worst = std::max(worst, h.dist2);
  for (const auto& h : nearest_all(b, a)) worst = std::max(worst, h.dist2);
  return std::sqrt(worst);
}

double normal_cosine(std::span<const Vec3> a, std::span<const Vec3> a_normals,
                     std::span<const Vec3> b, std::span<const Vec3> b_normals) {
  require_non_empty(a, b);
  if (a.size() != a_normals.size() || b.size() != b_normals.size())
    throw std::invalid_argument("normal_cosine: normals do not match points");
  auto directed = [](std::span<const Vec3> from, std::span<const Vec3> from_n,
                     std::span<const Vec3> to, std::span<const Vec3> to_n) {
    const auto hits = nearest_all(from, to);
    double sum = 0.0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const double denom = from_n[i].norm() * to_n[hits[i].index].norm();
      if (denom > 0.0) sum += std::abs(from_n[i].dot(to_n[hits[i].index])) / denom;
    }
    return sum / static_cast<double>(hits.size());
  };
  return 0.5 * (directed(a, a_normals, b, b_normals) + directed(b, b_normals, a, a_normals));
}

}  // namespace mash
