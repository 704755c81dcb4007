#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mash {

inline constexpr int kMaxShDegree = 6;
inline constexpr int kMaxShCoeffs = (kMaxShDegree + 1) * (kMaxShDegree + 1);

/// Maximum band index L of a real spherical-harmonic expansion.
class ShDegree {
 public:
  explicit ShDegree(int degree);

  static ShDegree from_coeff_count(std::size_t count);

  int value() const { return degree_; }
  std::size_t num_coeffs() const {
    return static_cast<std::size_t>((degree_ + 1) * (degree_ + 1));
  }

  friend bool operator==(ShDegree, ShDegree) = default;

 private:
  int degree_;
};

/// Flat band-major index of (l, m): (0,0), (1,-1), (1,0), (1,1), (2,-2), ...
constexpr int sh_index(int l, int m) { return l * l + l + m; }

// Real orthonormal spherical harmonics (no Condon-Shortley phase):
//   m > 0: sqrt(2) N_lm P_l^m(cos t) cos(m p)
//   m = 0: N_l0 P_l(cos t)
//   m < 0: sqrt(2) N_l|m| P_l^|m|(cos t) sin(|m| p)
// `out` must hold at least degree.num_coeffs() values.
void eval_basis(ShDegree degree, double theta, double phi, std::span<double> out);
std::vector<double> eval_basis(ShDegree degree, double theta, double phi);

/// Values plus partials w.r.t. theta and phi. The theta partials come from
/// differentiating the Legendre recurrence and stay finite at both poles.
void eval_basis_grad(ShDegree degree, double theta, double phi, std::span<double> values,
                     std::span<double> d_theta, std::span<double> d_phi);

struct ShGradient {
  std::vector<double> d_theta;
  std::vector<double> d_phi;
};
ShGradient eval_basis_grad(ShDegree degree, double theta, double phi);

}  // namespace mash
