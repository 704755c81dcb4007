#include "mash/orientation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <utility>

#include "mash/kdtree.hpp"
#include "mash/log.hpp"
#include "mash/parallel.hpp"
#include "mash/point_utils.hpp"

namespace mash {
namespace {

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double score = 0.0;  // > 0: patches agree as they are
};

}  // namespace

PatchOrientation orient_patches(const SampleSet& samples, const OrientationOptions& options) {
  const std::size_t m = samples.anchors.size();
  PatchOrientation out;
  out.signs.assign(m, 1);

  std::vector<std::size_t> live;  // patches that have samples
  std::vector<Vec3> centroids;
  std::vector<Vec3> mean_normals;
  std::vector<Vec3> all_points;
  std::vector<Vec3> all_normals;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < m; ++i) {
    const AnchorSamples& a = samples.anchors[i];
    if (a.normals.size() != a.points.size())
      throw std::invalid_argument("orient_patches: samples need normals");
    if (a.points.empty()) continue;
    live.push_back(i);
    centroids.push_back(centroid(a.points));
    Vec3 n = Vec3::Zero();
    for (const Vec3& v : a.normals) n += v;
    mean_normals.push_back(n.normalized());
    all_points.insert(all_points.end(), a.points.begin(), a.points.end());
    all_normals.insert(all_normals.end(), a.normals.begin(), a.normals.end());
    owner.insert(owner.end(), a.points.size(), live.size() - 1);
  }
  const std::size_t n_live = live.size();
  if (n_live == 0) return out;

  // Edge evidence keyed by (lo, hi) live-patch index.
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> evidence;
  auto key = [](std::size_t a, std::size_t b) { return std::make_pair(std::min(a, b), std::max(a, b)); };

  if (n_live > 1) {
    const KdTree centroid_tree(centroids);
    const std::size_t k = std::min(options.graph_neighbors + 1, n_live);
    for (std::size_t i = 0; i < n_live; ++i) {
      for (const auto& h : centroid_tree.knn(centroids[i], k)) {
        if (h.index != i) evidence.try_emplace(key(i, h.index), 0.0, 0);
      }
    }

    // Sample-level agreement between nearby points of different patches.
    const KdTree sample_tree(all_points);
    const double radius = 3.0 * (all_points.size() >= 2 ? mean_nn_spacing(all_points, sample_tree) : 0.0);
    std::vector<KdTree::Hit> cross(all_points.size());
    parallel_for(all_points.size(), [&](std::size_t s) {
      cross[s] = sample_tree.nearest_if(all_points[s],
                                        [&](std::size_t j) { return owner[j] != owner[s]; });
    });
    for (std::size_t s = 0; s < all_points.size(); ++s) {
      if (!cross[s].valid() || std::sqrt(cross[s].dist2) > radius) continue;
      auto& e = evidence[key(owner[s], owner[cross[s].index])];
      e.first += all_normals[s].dot(all_normals[cross[s].index]);
      e.second += 1;
    }
  }

  std::vector<Edge> edges;
  edges.reserve(evidence.size());
  for (const auto& [k, ev] : evidence) {
    const double score = ev.second > 0 ? ev.first / static_cast<double>(ev.second)
                                       : mean_normals[k.first].dot(mean_normals[k.second]);
    edges.push_back({k.first, k.second, score});
  }
  std::vector<std::vector<std::size_t>> incident(n_live);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    incident[edges[e].a].push_back(e);
    incident[edges[e].b].push_back(e);
  }

  const Vec3 global_center = centroid(all_points);
  std::vector<int> sign(n_live, 0);
  std::vector<bool> done(n_live, false);
  for (;;) {
    // Seed: highest unvisited patch.
    std::size_t seed = n_live;
    for (std::size_t i = 0; i < n_live; ++i) {
      if (!done[i] && (seed == n_live || centroids[i].z() > centroids[seed].z())) seed = i;
    }
    if (seed == n_live) break;
    ++out.components;
    const double facing = mean_normals[seed].dot(centroids[seed] - global_center);
    sign[seed] = (facing >= 0.0 ? 1 : -1) * (options.seed_sign < 0 ? -1 : 1);

    // Prim's maximum spanning tree on |score|, propagating signs along tree edges.
    using Item = std::pair<double, std::pair<std::size_t, std::size_t>>;  // weight, (edge, target)
    auto cmp = [](const Item& x, const Item& y) {
      return x.first < y.first || (x.first == y.first && x.second > y.second);
    };
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> frontier(cmp);
    auto expand = [&](std::size_t node) {
      done[node] = true;
      for (std::size_t e : incident[node]) {
        const std::size_t other = edges[e].a == node ? edges[e].b : edges[e].a;
        if (!done[other]) frontier.push({std::abs(edges[e].score), {e, other}});
      }
    };
    expand(seed);
    while (!frontier.empty()) {
      const auto [w, item] = frontier.top();
      frontier.pop();
      const auto [e, target] = item;
      if (done[target]) continue;
      const std::size_t from = edges[e].a == target ? edges[e].b : edges[e].a;
      sign[target] = sign[from] * (edges[e].score >= 0.0 ? 1 : -1);
      expand(target);
    }
  }
  if (out.components > 1) {
    log_warning("patch graph has " + std::to_string(out.components) +
                " components; each was oriented independently");
  }
  for (std::size_t i = 0; i < n_live; ++i) out.signs[live[i]] = sign[i];
  return out;
}

OrientedSamples apply_patch_signs(const SampleSet& samples, std::span<const int> signs) {
  if (signs.size() != samples.anchors.size())
    throw std::invalid_argument("apply_patch_signs: one sign per anchor required");
  OrientedSamples out;
  for (std::size_t i = 0; i < samples.anchors.size(); ++i) {
    const AnchorSamples& a = samples.anchors[i];
    if (a.normals.size() != a.points.size())
      throw std::invalid_argument("apply_patch_signs: samples need normals");
    for (std::size_t k = 0; k < a.points.size(); ++k) {
      out.points.push_back(a.points[k]);
      out.normals.push_back(static_cast<double>(signs[i]) * a.normals[k]);
      out.anchor_ids.push_back(static_cast<std::uint32_t>(i));
      out.omegas.push_back(a.rays[k].omega);
    }
  }
  return out;
}

ReferenceNormals select_reference(const OrientedSamples& oriented,
                                  const OrientationOptions& options) {
  const std::size_t n = oriented.size();
  if (n == 0) return {};
  const auto wanted = static_cast<std::size_t>(options.reference_fraction * static_cast<double>(n));
  const std::size_t count = std::min(n, std::max(options.reference_min, wanted));
  ReferenceNormals ref;
  for (std::size_t idx : farthest_point_sampling(oriented.points, count, 0)) {
    ref.points.push_back(oriented.points[idx]);
    ref.normals.push_back(oriented.normals[idx]);
  }
  return ref;
}

OrientedSamples blend_normals(const OrientedSamples& oriented, const ReferenceNormals& reference,
                              std::size_t* antiparallel_count) {
  if (reference.points.empty()) throw std::invalid_argument("blend_normals: empty reference set");
  const KdTree tree(reference.points);
  OrientedSamples out = oriented;
  std::vector<char> antiparallel(oriented.size(), 0);
  parallel_for(oriented.size(), [&](std::size_t i) {
    const Vec3& src = oriented.normals[i];
    const Vec3& ref = reference.normals[tree.nearest(oriented.points[i]).index];
    if (src.dot(ref) < -1.0 + 1e-9) {
      antiparallel[i] = 1;
      out.normals[i] = src.normalized();
      return;
    }
    const double w = std::sqrt(std::clamp(oriented.omegas[i], 0.0, 1.0));
    out.normals[i] = slerp(src, ref, w).normalized();
  });
  if (antiparallel_count) {
    *antiparallel_count = static_cast<std::size_t>(std::count(antiparallel.begin(), antiparallel.end(), 1));
  }
  return out;
}

OrientedSamples orient_samples(const SampleSet& samples, const OrientationOptions& options) {
  const PatchOrientation orientation = orient_patches(samples, options);
  const OrientedSamples signed_samples = apply_patch_signs(samples, orientation.signs);
  if (signed_samples.size() == 0) return signed_samples;
  const ReferenceNormals reference = select_reference(signed_samples, options);
  return blend_normals(signed_samples, reference);
}

}  // namespace mash
