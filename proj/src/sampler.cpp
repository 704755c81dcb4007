#include "mash/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "mash/parallel.hpp"

namespace mash {

std::vector<SphericalDir> fibonacci_presample(int n_dir) {
  if (n_dir < 1) throw std::invalid_argument("fibonacci_presample: n_dir must be >= 1");
  const double golden = (1.0 + std::sqrt(5.0)) * kPi;
  const double n = static_cast<double>(n_dir);
  std::vector<SphericalDir> out(static_cast<std::size_t>(n_dir));
  for (int j = 1; j <= n_dir; ++j) {
    const double z = std::clamp(1.0 - (2.0 * j - 1.0) / n, -1.0, 1.0);
    out[static_cast<std::size_t>(j - 1)] = {std::acos(z), wrap_two_pi(golden * (j - 0.5))};
  }
  return out;
}

std::vector<RayParam> filter_in_mask(const Anchor& anchor,
                                     std::span<const SphericalDir> presamples) {
  std::vector<RayParam> kept;
  kept.reserve(presamples.size());
  for (const SphericalDir& d : presamples) {
    const double omega = d.theta / mask_angle(anchor, d.phi);
    if (omega <= 1.0) kept.push_back({omega, d.phi, d.theta});
  }
  return kept;
}

Vec3 ray_direction(const Anchor& anchor, const RayParam& ray) {
  const double alpha = mask_angle(anchor, ray.phi);
  const Vec3 boundary(std::sin(alpha) * std::cos(ray.phi), std::sin(alpha) * std::sin(ray.phi),
                      std::cos(alpha));
  return slerp(Vec3::UnitZ(), boundary, ray.omega);
}

std::vector<RayParam> boundary_rays(const Anchor& anchor, int n_bd) {
  if (n_bd < 3) throw std::invalid_argument("boundary sample count must be >= 3");
  std::vector<RayParam> rays(static_cast<std::size_t>(n_bd));
  for (int i = 0; i < n_bd; ++i) {
    const double phi = kTwoPi * i / n_bd;
    rays[static_cast<std::size_t>(i)] = {1.0, phi, mask_angle(anchor, phi)};
  }
  return rays;
}

std::vector<Vec3> sample_surface(const MashModel& model, std::size_t anchor_index,
                                 std::span<const RayParam> rays, PatchOptions options) {
  const PatchEvaluator patch(model.anchors.at(anchor_index), options);
  std::vector<Vec3> out;
  out.reserve(rays.size());
  for (const RayParam& r : rays) out.push_back(patch.point(r));
  return out;
}

std::vector<Vec3> sample_boundary(const MashModel& model, std::size_t anchor_index, int n_bd,
                                  PatchOptions options) {
  const auto rays = boundary_rays(model.anchors.at(anchor_index), n_bd);
  return sample_surface(model, anchor_index, rays, options);
}

Vec3 surface_normal(const MashModel& model, std::size_t anchor_index, const RayParam& ray,
                    PatchOptions options) {
  const PatchEvaluator patch(model.anchors.at(anchor_index), options);
  return patch.normal(std::min(ray.omega, 1.0 - 1e-6), ray.phi);
}

std::size_t SampleSet::total_points() const {
  std::size_t n = 0;
  for (const auto& a : anchors) n += a.points.size();
  return n;
}

std::vector<Vec3> SampleSet::all_points() const {
  std::vector<Vec3> out;
  out.reserve(total_points());
  for (const auto& a : anchors) out.insert(out.end(), a.points.begin(), a.points.end());
  return out;
}

std::vector<Vec3> SampleSet::all_boundary_points() const {
  std::vector<Vec3> out;
  for (const auto& a : anchors)
    out.insert(out.end(), a.boundary_points.begin(), a.boundary_points.end());
  return out;
}

SampleSet sample_model(const MashModel& model, const SampleOptions& options) {
  model.validate();
  const auto presamples = fibonacci_presample(options.n_dir);
  SampleSet set;
  set.anchors.resize(model.size());
  parallel_for(model.size(), [&](std::size_t i) {
    const Anchor& anchor = model.anchors[i];
    const PatchEvaluator patch(anchor, options.patch);
    AnchorSamples& out = set.anchors[i];
    out.rays = filter_in_mask(anchor, presamples);
    out.points.reserve(out.rays.size());
    for (const RayParam& r : out.rays) out.points.push_back(patch.point(r));
    for (const RayParam& r : boundary_rays(anchor, options.n_bd))
      out.boundary_points.push_back(patch.point(r));
    if (options.with_normals) {
      out.normals.reserve(out.rays.size());
      double facing = 0.0;
      for (std::size_t k = 0; k < out.rays.size(); ++k) {
        const Vec3 n = patch.normal(std::min(out.rays[k].omega, 1.0 - 1e-6), out.rays[k].phi);
        facing += n.dot(out.points[k] - anchor.position);
        out.normals.push_back(n);
      }
      if (facing < 0.0) {
        for (Vec3& n : out.normals) n = -n;
      }
    }
  });
  return set;
}

}  // namespace mash
