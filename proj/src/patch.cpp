#include "mash/patch.hpp"

#include <cmath>

namespace mash {

struct PatchEvaluator::Local {
  MaskValue mask;
  double theta = 0.0;
  double dist = 0.0;
  double dist_dtheta = 0.0;
  double dist_dphi = 0.0;
  std::array<double, kMaxShCoeffs> basis{};
  Vec3 ray;
  Vec3 ray_dtheta;
  Vec3 ray_dphi;
  Vec3 q;      // before inversion
  Vec3 u;      // q - O
  double n2 = 1.0;
  double scale = 1.0;  // R^2 / |u|^2
  bool clamped = false;
  Vec3 p_local;
};

double inversion_center_scale(InversionCenter center) {
  return center == InversionCenter::constant_distance ? kY00 : 1.0;
}

Vec3 inverse_transform_point(const Anchor& anchor, const Vec3& q_local, PatchOptions options) {
  const double c = inversion_center_scale(options.center) * anchor.sh_coeffs.at(0);
  const Vec3 center(0.0, 0.0, -c);
  const Vec3 u = q_local - center;
  const double n2 = std::max(u.squaredNorm(), kInversionEps * kInversionEps);
  return center + (4.0 * c * c / n2) * u;
}

PatchEvaluator::PatchEvaluator(const Anchor& anchor, PatchOptions options)
    : anchor_(anchor),
      degree_(anchor.sh_degree()),
      options_(options),
      center_scale_(inversion_center_scale(options.center)),
      rotation_(rotation_matrix(anchor.rotvec)),
      rotation_derivatives_(rotation_matrix_derivatives(anchor.rotvec)) {}

PatchEvaluator::Local PatchEvaluator::evaluate_local(double omega, double phi,
                                                     bool with_phi_partials) const {
  Local s;
  s.mask = eval_mask(anchor_.mask_coeffs, phi);
  s.theta = omega * s.mask.alpha;

  std::array<double, kMaxShCoeffs> d_theta{};
  std::array<double, kMaxShCoeffs> d_phi{};
  eval_basis_grad(degree_, s.theta, phi, s.basis, d_theta, d_phi);
  const std::size_t n = anchor_.sh_coeffs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double c = anchor_.sh_coeffs[i];
    s.dist += c * s.basis[i];
    s.dist_dtheta += c * d_theta[i];
    if (with_phi_partials) s.dist_dphi += c * d_phi[i];
  }

  const double st = std::sin(s.theta);
  const double ct = std::cos(s.theta);
  const double sp = std::sin(phi);
  const double cp = std::cos(phi);
  s.ray = Vec3(st * cp, st * sp, ct);
  s.ray_dtheta = Vec3(ct * cp, ct * sp, -st);
  s.ray_dphi = Vec3(-st * sp, st * cp, 0.0);
  s.q = s.dist * s.ray;

  if (options_.inversion) {
    const double c = center_scale_ * anchor_.sh_coeffs[0];
    s.u = s.q + Vec3(0.0, 0.0, c);
    s.n2 = s.u.squaredNorm();
    if (s.n2 < kInversionEps * kInversionEps) {
      s.n2 = kInversionEps * kInversionEps;
      s.clamped = true;
    }
    s.scale = 4.0 * c * c / s.n2;
    s.p_local = Vec3(0.0, 0.0, -c) + s.scale * s.u;
  } else {
    s.p_local = s.q;
  }
  return s;
}

Vec3 PatchEvaluator::point(const RayParam& ray) const {
  const Local s = evaluate_local(ray.omega, ray.phi, false);
  return anchor_.position + rotation_ * s.p_local;
}

void PatchEvaluator::backprop(const RayParam& ray, const Vec3& grad_point,
                              std::span<double> grad) const {
  const Local s = evaluate_local(ray.omega, ray.phi, false);
  const std::size_t n_sh = anchor_.sh_coeffs.size();
  double* g_pos = grad.data();
  double* g_rot = grad.data() + 3;
  double* g_sh = grad.data() + 6;
  double* g_mask = grad.data() + 6 + n_sh;

  for (int i = 0; i < 3; ++i) {
    g_pos[i] += grad_point[i];
    g_rot[i] += grad_point.dot(rotation_derivatives_[static_cast<std::size_t>(i)] * s.p_local);
  }

  const Vec3 g_local = rotation_.transpose() * grad_point;
  Vec3 g_q = g_local;
  double g_c_direct = 0.0;
  if (options_.inversion) {
    const double c = center_scale_ * anchor_.sh_coeffs[0];
    const double gu_dot = g_local.dot(s.u);
    Vec3 g_u = s.scale * g_local;
    if (!s.clamped) g_u -= (2.0 * s.scale / s.n2) * gu_dot * s.u;
    // With h = scale * C_0^0: dO/dh = -z, d(R^2)/dh = 8h, du/dh = +z.
    g_c_direct = center_scale_ * (-g_local.z() + gu_dot * (8.0 * c / s.n2) + g_u.z());
    g_q = g_u;
  }

  const double g_dist = g_q.dot(s.ray);
  const double g_theta = g_dist * s.dist_dtheta + s.dist * g_q.dot(s.ray_dtheta);
  for (std::size_t i = 0; i < n_sh; ++i) g_sh[i] += g_dist * s.basis[i];
  g_sh[0] += g_c_direct;

  const double g_s = g_theta * ray.omega * s.mask.dalpha_ds;
  g_mask[0] += g_s;
  const std::size_t k_max = anchor_.mask_coeffs.size() / 2;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double kd = static_cast<double>(k);
    g_mask[2 * k - 1] += g_s * std::cos(kd * ray.phi);
    g_mask[2 * k] += g_s * std::sin(kd * ray.phi);
  }
}

SurfacePartials PatchEvaluator::partials(double omega, double phi) const {
  const Local s = evaluate_local(omega, phi, true);
  const Vec3 dq_dtheta = s.dist_dtheta * s.ray + s.dist * s.ray_dtheta;
  const Vec3 dq_dphi_fixed = s.dist_dphi * s.ray + s.dist * s.ray_dphi;
  const Vec3 dq_domega = s.mask.alpha * dq_dtheta;
  const Vec3 dq_dphi = dq_dphi_fixed + omega * s.mask.dalpha_dphi * dq_dtheta;

  Mat3 jac = Mat3::Identity();
  Vec3 radial = s.ray;
  if (options_.inversion) {
    const Vec3 u_hat = s.u / std::sqrt(s.n2);
    const Mat3 householder = Mat3::Identity() - 2.0 * u_hat * u_hat.transpose();
    jac = s.clamped ? Mat3(s.scale * Mat3::Identity()) : Mat3(s.scale * householder);
    // Inversion reverses orientation: (Ja) x (Jb) is proportional to -H (a x b).
    radial = -(householder * s.ray);
  }

  SurfacePartials out;
  out.point = anchor_.position + rotation_ * s.p_local;
  out.d_omega = rotation_ * (jac * dq_domega);
  out.d_phi = rotation_ * (jac * dq_dphi);
  out.fallback_normal = (rotation_ * radial).normalized();
  return out;
}

Vec3 PatchEvaluator::normal(double omega, double phi) const {
  const SurfacePartials p = partials(omega, phi);
  const Vec3 n = p.d_omega.cross(p.d_phi);
  const double len = n.norm();
  if (len >= 1e-12) return n / len;
  // At the pole d_phi vanishes. Near it p ~ p0 + omega * alpha(phi) * T(phi)
  // with T linear in (cos phi, sin phi), so T(phi) x T(phi + pi/2) gives the
  // limiting normal with the same orientation as d_omega x d_phi.
  const Vec3 limit = p.d_omega.cross(partials(omega, phi + 0.5 * kPi).d_omega);
  const double limit_len = limit.norm();
  if (limit_len >= 1e-12) return limit / limit_len;
  return p.fallback_normal;
}

}  // namespace mash
