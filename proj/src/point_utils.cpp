#include "mash/point_utils.hpp"

#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mash {

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t count,
                                                 std::size_t first) {
  if (count > points.size()) throw std::invalid_argument("fps: count exceeds point count");
  if (count == 0) return {};
  if (first >= points.size()) throw std::invalid_argument("fps: first index out of range");
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
  std::size_t current = first;
  for (std::size_t n = 0; n < count; ++n) {
    picked.push_back(current);
    std::size_t next = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      dist[i] = std::min(dist[i], (points[i] - points[current]).squaredNorm());
      if (dist[i] > far) {
        far = dist[i];
        next = i;
      }
    }
    current = next;
  }
  return picked;
}

double mean_nn_spacing(std::span<const Vec3> points, const KdTree& tree) {
  if (points.size() < 2) throw std::invalid_argument("spacing needs at least two points");
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto hit = tree.nearest_if(points[i], [i](std::size_t j) { return j != i; });
    sum += std::sqrt(hit.dist2);
  }
  return sum / static_cast<double>(points.size());
}

double mean_nn_spacing(std::span<const Vec3> points) {
  const KdTree tree(points);
  return mean_nn_spacing(points, tree);
}

Vec3 centroid(std::span<const Vec3> points) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : points) c += p;
  return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
}

Vec3 estimate_normal(std::span<const Vec3> points, const KdTree& tree, std::size_t index,
                     std::size_t k, const Vec3& fallback_center) {
  const Vec3& p = points[index];
  const auto hits = tree.knn(p, k);
  Vec3 mean = Vec3::Zero();
  for (const auto& h : hits) mean += tree.point(h.index);
  mean /= static_cast<double>(hits.size());
  Mat3 cov = Mat3::Zero();
  double spread = 0.0;
  for (const auto& h : hits) {
    const Vec3 d = tree.point(h.index) - mean;
    cov += d * d.transpose();
    spread += d.norm();
  }
  spread /= static_cast<double>(hits.size());
  const Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  Vec3 n = solver.eigenvectors().col(0).normalized();

  const double offset = n.dot(p - mean);
  if (std::abs(offset) > 1e-2 * spread) {
    if (offset < 0.0) n = -n;
  } else if (n.dot(p - fallback_center) < 0.0) {
    n = -n;
  }
  return n;
}

}  // namespace mash
