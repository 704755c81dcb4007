#pragma once

#include <array>
#include <span>

#include "mash/geometry.hpp"
#include "mash/model.hpp"

namespace mash {

/// Denominator floor for the anchored inversion.
inline constexpr double kInversionEps = 1e-8;

/// Y_0^0 = 1 / (2 sqrt(pi)).
inline constexpr double kY00 = 0.28209479177387814;

/// How the inversion centre distance h is derived from C_0^0.
enum class InversionCenter {
  /// h = C_0^0 * Y_0^0, the distance of the constant band. The initial
  /// constant-distance hemisphere then maps to a planar disk at distance h.
  constant_distance,
  /// h = C_0^0 taken as a raw coefficient.
  raw_coefficient,
};

struct PatchOptions {
  /// Test hook: skip the anchored inverse transformation.
  bool inversion = true;
  InversionCenter center = InversionCenter::constant_distance;
};

/// Scale s with h = s * C_0^0.
double inversion_center_scale(InversionCenter center);

/// Anchored inverse transformation of a local point: centre O = -h z and
/// radius R = 2h.
Vec3 inverse_transform_point(const Anchor& anchor, const Vec3& q_local, PatchOptions options = {});

struct SurfacePartials {
  Vec3 point;
  Vec3 d_omega;
  Vec3 d_phi;
  /// Radial direction carried through the same orientation convention as
  /// d_omega x d_phi; used where the cross product degenerates.
  Vec3 fallback_normal;
};

/// Differentiable evaluation of one anchor's surface patch. Caches the
/// rotation and its derivatives; holds a reference to the anchor, which must
/// outlive the evaluator.
class PatchEvaluator {
 public:
  explicit PatchEvaluator(const Anchor& anchor, PatchOptions options = {});

  /// World point p + R_v * inv(d(omega*alpha(phi), phi) * r(omega, phi)).
  Vec3 point(const RayParam& ray) const;

  /// Adds d(loss)/d(anchor params) to `grad` given d(loss)/d(point).
  /// `grad` follows the flattened anchor layout (position, rotvec, sh, mask).
  void backprop(const RayParam& ray, const Vec3& grad_point, std::span<double> grad) const;

  /// Point plus partial derivatives w.r.t. the mask coordinates (omega, phi).
  SurfacePartials partials(double omega, double phi) const;

  /// Unit normal d_omega x d_phi (unsigned patch convention). At the pole it
  /// uses the limiting tangent plane, and the radial direction only if that
  /// degenerates too.
  Vec3 normal(double omega, double phi) const;

  const Mat3& rotation() const { return rotation_; }
  const Anchor& anchor() const { return anchor_; }

 private:
  struct Local;
  Local evaluate_local(double omega, double phi, bool with_phi_partials) const;

  const Anchor& anchor_;
  ShDegree degree_;
  PatchOptions options_;
  double center_scale_;
  Mat3 rotation_;
  std::array<Mat3, 3> rotation_derivatives_;
};

}  // namespace mash
