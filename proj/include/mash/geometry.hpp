#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mash {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline Mat3 cross_matrix(const Vec3& v) {
  Mat3 k;
  k << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return k;
}

// Spherical linear interpolation between unit vectors. Falls back to
// normalized linear interpolation when the endpoints are nearly parallel.
// Antiparallel endpoints have no unique geodesic; callers must guard.
inline Vec3 slerp(const Vec3& from, const Vec3& to, double t) {
  const double cos_angle = std::clamp(from.dot(to), -1.0, 1.0);
  const double angle = std::acos(cos_angle);
  if (angle < 1e-7) {
    return ((1.0 - t) * from + t * to).normalized();
  }
  const double s = std::sin(angle);
  return (std::sin((1.0 - t) * angle) / s) * from + (std::sin(t * angle) / s) * to;
}

// Angle in [0, 2pi).
inline double wrap_two_pi(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

}  // namespace mash
