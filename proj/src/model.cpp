#include "mash/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mash {

Anchor Anchor::zeros(ShDegree degree, int mask_degree) {
  if (mask_degree < 0) throw std::invalid_argument("mask degree must be non-negative");
  Anchor a;
  a.sh_coeffs.assign(degree.num_coeffs(), 0.0);
  a.mask_coeffs.assign(static_cast<std::size_t>(2 * mask_degree + 1), 0.0);
  return a;
}

MashModel MashModel::zeros(std::size_t anchor_count, ShDegree degree, int mask_degree,
                           int n_dir) {
  MashModel m;
  m.sh_degree = degree.value();
  m.mask_degree = mask_degree;
  m.n_dir = n_dir;
  m.anchors.assign(anchor_count, Anchor::zeros(degree, mask_degree));
  return m;
}

std::size_t MashModel::params_per_anchor() const {
  return 6 + ShDegree(sh_degree).num_coeffs() + static_cast<std::size_t>(2 * mask_degree + 1);
}

std::size_t MashModel::param_count() const {
  return mash::param_count(anchors.size(), mask_degree, sh_degree);
}

std::size_t param_count(std::size_t anchors, int mask_degree, int sh_degree) {
  const auto k = static_cast<std::size_t>(mask_degree);
  const auto l = static_cast<std::size_t>(sh_degree);
  return anchors * (2 * k + 1 + (l + 1) * (l + 1) + 6);
}

void MashModel::validate() const {
  const ShDegree degree(sh_degree);
  if (mask_degree < 0) throw std::invalid_argument("mask degree must be non-negative");
  if (anchors.empty()) throw std::invalid_argument("model needs at least one anchor");
  if (n_dir < 16) throw std::invalid_argument("n_dir must be >= 16");
  const auto n_mask = static_cast<std::size_t>(2 * mask_degree + 1);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Anchor& a = anchors[i];
    const std::string where = "anchor " + std::to_string(i) + ": ";
    if (a.sh_coeffs.size() != degree.num_coeffs())
      throw std::invalid_argument(where + "wrong sh coefficient count");
    if (a.mask_coeffs.size() != n_mask)
      throw std::invalid_argument(where + "wrong mask coefficient count");
    bool finite = a.position.allFinite() && a.rotvec.allFinite();
    for (double c : a.sh_coeffs) finite = finite && std::isfinite(c);
    for (double c : a.mask_coeffs) finite = finite && std::isfinite(c);
    if (!finite) throw std::invalid_argument(where + "non-finite parameter");
  }
}

std::vector<double> MashModel::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const Anchor& a : anchors) {
    out.insert(out.end(), a.position.data(), a.position.data() + 3);
    out.insert(out.end(), a.rotvec.data(), a.rotvec.data() + 3);
    out.insert(out.end(), a.sh_coeffs.begin(), a.sh_coeffs.end());
    out.insert(out.end(), a.mask_coeffs.begin(), a.mask_coeffs.end());
  }
  return out;
}

void MashModel::unflatten(std::span<const double> params) {
  if (params.size() != param_count()) {
    throw std::invalid_argument("unflatten: expected " + std::to_string(param_count()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  std::size_t at = 0;
  for (Anchor& a : anchors) {
    for (int i = 0; i < 3; ++i) a.position[i] = params[at++];
    for (int i = 0; i < 3; ++i) a.rotvec[i] = params[at++];
    for (double& c : a.sh_coeffs) c = params[at++];
    for (double& c : a.mask_coeffs) c = params[at++];
  }
}

MaskValue eval_mask(std::span<const double> mask_coeffs, double phi) {
  double s = mask_coeffs.empty() ? 0.0 : mask_coeffs[0];
  double ds = 0.0;
  const std::size_t k_max = mask_coeffs.size() / 2;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double a = mask_coeffs[2 * k - 1];
    const double b = mask_coeffs[2 * k];
    const double kd = static_cast<double>(k);
    const double c = std::cos(kd * phi);
    const double sn = std::sin(kd * phi);
    s += a * c + b * sn;
    ds += kd * (-a * sn + b * c);
  }
  const double sig = 1.0 / (1.0 + std::exp(-s));
  MaskValue v;
  // Keep alpha strictly inside (0, pi): sigmoid rounds to exactly 0 or 1 once
  // |s| exceeds about 37, and alpha = pi would put the boundary ray at -z.
  v.alpha = std::clamp(kPi * sig, kMaskAngleMargin, kPi - kMaskAngleMargin);
  v.dalpha_ds = kPi * sig * (1.0 - sig);
  v.dalpha_dphi = v.dalpha_ds * ds;
  return v;
}

double mask_angle(const Anchor& anchor, double phi) {
  return eval_mask(anchor.mask_coeffs, phi).alpha;
}

double spherical_distance(const Anchor& anchor, double theta, double phi) {
  const ShDegree degree = anchor.sh_degree();
  std::array<double, kMaxShCoeffs> y{};
  eval_basis(degree, theta, phi, y);
  double d = 0.0;
  for (std::size_t i = 0; i < anchor.sh_coeffs.size(); ++i) d += anchor.sh_coeffs[i] * y[i];
  return d;
}

Mat3 rotation_matrix(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) return Mat3::Identity();
  const Vec3 k = rotvec / angle;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return c * Mat3::Identity() + (1.0 - c) * (k * k.transpose()) + s * cross_matrix(k);
}

std::array<Mat3, 3> rotation_matrix_derivatives(const Vec3& rotvec) {
  // R = I + a [v]x + b [v]x^2 with a = sin(t)/t, b = (1 - cos t)/t^2.
  const double t = rotvec.norm();
  const double t2 = t * t;
  double a, b, da_over_t, db_over_t;
  if (t < 1e-3) {
    const double t4 = t2 * t2;
    a = 1.0 - t2 / 6.0 + t4 / 120.0;
    b = 0.5 - t2 / 24.0 + t4 / 720.0;
    da_over_t = -1.0 / 3.0 + t2 / 30.0 - t4 / 840.0;
    db_over_t = -1.0 / 12.0 + t2 / 180.0 - t4 / 6720.0;
  } else {
    const double s = std::sin(t);
    const double c = std::cos(t);
    a = s / t;
    b = (1.0 - c) / t2;
    da_over_t = (t * c - s) / (t2 * t);
    db_over_t = (t * s - 2.0 * (1.0 - c)) / (t2 * t2);
  }
  const Mat3 vx = cross_matrix(rotvec);
  const Mat3 vx2 = vx * vx;
  std::array<Mat3, 3> out;
  for (int i = 0; i < 3; ++i) {
    const Mat3 ex = cross_matrix(Vec3::Unit(i));
    out[static_cast<std::size_t>(i)] = a * ex + b * (ex * vx + vx * ex) +
                                       (da_over_t * rotvec[i]) * vx +
                                       (db_over_t * rotvec[i]) * vx2;
  }
  return out;
}

void canonicalize_rotvec(Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < kTwoPi) return;
  const double wrapped = std::fmod(angle, kTwoPi);
  rotvec *= wrapped / angle;
}

}  // namespace mash
