#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/sampler.hpp"

namespace mash {

struct OrientedSamples {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<std::uint32_t> anchor_ids;
  std::vector<double> omegas;

  std::size_t size() const { return points.size(); }
};

struct OrientationOptions {
  /// k of the patch-centroid neighbour graph.
  std::size_t graph_neighbors = 8;
  /// Reference subset size: max(reference_min, reference_fraction * N), capped at N.
  double reference_fraction = 0.1;
  std::size_t reference_min = 512;
  /// +1 or -1; multiplies the seed decision of every component.
  int seed_sign = 1;
};

struct PatchOrientation {
  std::vector<int> signs;  ///< one of {+1, -1} per anchor
  std::size_t components = 0;
};

/// Chooses a sign per patch so adjacent patches agree, by maximum-spanning-tree
/// propagation over a patch adjacency graph. Each connected component is
/// seeded at its highest patch, signed to face away from the sample centroid.
/// Requires samples with normals.
PatchOrientation orient_patches(const SampleSet& samples, const OrientationOptions& options = {});

/// Flattens samples, applying per-patch signs to the patch normals.
OrientedSamples apply_patch_signs(const SampleSet& samples, std::span<const int> signs);

struct ReferenceNormals {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
};

/// Farthest-point subset of already oriented samples.
ReferenceNormals select_reference(const OrientedSamples& oriented,
                                  const OrientationOptions& options = {});

/// n = slerp(n_src, n_ref, sqrt(omega)) with n_ref taken from the nearest
/// reference point. Antiparallel pairs keep n_src and are counted.
OrientedSamples blend_normals(const OrientedSamples& oriented, const ReferenceNormals& reference,
                              std::size_t* antiparallel_count = nullptr);

/// orient_patches + apply_patch_signs + select_reference + blend_normals.
OrientedSamples orient_samples(const SampleSet& samples, const OrientationOptions& options = {});

}  // namespace mash
