#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/sh_basis.hpp"

namespace mash {

/// One masked anchored spherical distance function.
struct Anchor {
  Vec3 position = Vec3::Zero();
  /// Axis-angle: direction is the rotation axis, norm the angle in radians.
  Vec3 rotvec = Vec3::Zero();
  /// Band-major real SH coefficients, (L+1)^2 entries.
  std::vector<double> sh_coeffs;
  /// Trigonometric mask series [a0, a1, b1, ..., aK, bK].
  std::vector<double> mask_coeffs;

  static Anchor zeros(ShDegree degree, int mask_degree);

  ShDegree sh_degree() const { return ShDegree::from_coeff_count(sh_coeffs.size()); }
  int mask_degree() const { return static_cast<int>(mask_coeffs.size() / 2); }
  std::size_t param_count() const { return 6 + sh_coeffs.size() + mask_coeffs.size(); }
};

/// A pre-sampled direction expressed in mask-local coordinates.
/// The ray lies in the mask iff omega is in [0, 1].
struct RayParam {
  double omega = 0.0;
  double phi = 0.0;
  double theta_pre = 0.0;
};

struct MashModel {
  std::vector<Anchor> anchors;
  int sh_degree = 2;
  int mask_degree = 3;
  int n_dir = 400;

  static MashModel zeros(std::size_t anchor_count, ShDegree degree, int mask_degree, int n_dir);

  std::size_t size() const { return anchors.size(); }
  std::size_t params_per_anchor() const;
  std::size_t param_count() const;

  /// Throws std::invalid_argument when any invariant is violated.
  void validate() const;

  /// Per anchor: position(3), rotvec(3), sh_coeffs, mask_coeffs.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> params);
};

/// Total scalar parameters M * (2K + 1 + (L+1)^2 + 6).
std::size_t param_count(std::size_t anchors, int mask_degree, int sh_degree);

/// Mask series value and its derivatives at phi.
struct MaskValue {
  double alpha = 0.0;       ///< pi * sigmoid(s)
  double dalpha_ds = 0.0;   ///< pi * sigmoid'(s)
  double dalpha_dphi = 0.0;
};

/// Mask angles are clamped to [margin, pi - margin].
inline constexpr double kMaskAngleMargin = 1e-12;
MaskValue eval_mask(std::span<const double> mask_coeffs, double phi);

/// Mask boundary angle alpha(phi) in (0, pi).
double mask_angle(const Anchor& anchor, double phi);

/// d(theta, phi) = sum C_lm Y_lm(theta, phi). May be negative.
double spherical_distance(const Anchor& anchor, double theta, double phi);

/// Rodrigues rotation for an axis-angle vector. Identity when |v| < 1e-12.
Mat3 rotation_matrix(const Vec3& rotvec);

/// dR/dv_i for i = 0, 1, 2. Uses series expansions near zero angle so the
/// result is smooth through v = 0 (where it reduces to the cross-product
/// generators).
std::array<Mat3, 3> rotation_matrix_derivatives(const Vec3& rotvec);

/// Wraps the rotation angle into [0, 2pi) keeping the axis.
void canonicalize_rotvec(Vec3& rotvec);

}  // namespace mash
