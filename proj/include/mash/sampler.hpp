#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/model.hpp"
#include "mash/patch.hpp"

namespace mash {

inline constexpr int kDefaultDirections = 400;
inline constexpr int kDefaultBoundarySamples = 36;

struct SphericalDir {
  double theta = 0.0;
  double phi = 0.0;
};

/// theta_j = acos(1 - (2j - 1)/n), phi_j = (1 + sqrt 5) pi (j - 1/2) mod 2pi.
std::vector<SphericalDir> fibonacci_presample(int n_dir);

/// Keeps the presamples with omega = theta / alpha(phi) <= 1. The selection
/// is not differentiable and is re-run whenever the mask changes.
std::vector<RayParam> filter_in_mask(const Anchor& anchor, std::span<const SphericalDir> presamples);

/// slerp(z, r_phi, omega) in the anchor frame.
Vec3 ray_direction(const Anchor& anchor, const RayParam& ray);

/// n_bd rays at omega = 1 with phi evenly spaced over [0, 2pi).
std::vector<RayParam> boundary_rays(const Anchor& anchor, int n_bd);

std::vector<Vec3> sample_surface(const MashModel& model, std::size_t anchor_index,
                                 std::span<const RayParam> rays, PatchOptions options = {});

std::vector<Vec3> sample_boundary(const MashModel& model, std::size_t anchor_index, int n_bd,
                                  PatchOptions options = {});

/// Unit normal of the patch at the ray, before any per-patch sign fix.
Vec3 surface_normal(const MashModel& model, std::size_t anchor_index, const RayParam& ray,
                    PatchOptions options = {});

struct AnchorSamples {
  std::vector<Vec3> points;
  std::vector<RayParam> rays;
  std::vector<Vec3> boundary_points;
  /// Empty unless normals were requested. Signed to point away from the anchor
  /// on average.
  std::vector<Vec3> normals;
};

struct SampleSet {
  std::vector<AnchorSamples> anchors;

  std::size_t total_points() const;
  std::vector<Vec3> all_points() const;
  std::vector<Vec3> all_boundary_points() const;
};

struct SampleOptions {
  int n_dir = kDefaultDirections;
  int n_bd = kDefaultBoundarySamples;
  bool with_normals = false;
  PatchOptions patch;
};

SampleSet sample_model(const MashModel& model, const SampleOptions& options);

}  // namespace mash
