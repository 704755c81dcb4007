#include "mash/sh_basis.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mash/geometry.hpp"

namespace mash {
namespace {

// N_lm = sqrt((2l+1)/(4pi) * (l-m)!/(l+m)!), with the sqrt(2) factor folded in
// for m > 0.
struct NormTable {
  std::array<double, kMaxShCoeffs> k{};

  NormTable() {
    for (int l = 0; l <= kMaxShDegree; ++l) {
      for (int m = 0; m <= l; ++m) {
        double ratio = 1.0;
        for (int i = l - m + 1; i <= l + m; ++i) ratio /= static_cast<double>(i);
        double n = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * ratio);
        if (m > 0) n *= std::sqrt(2.0);
        k[static_cast<std::size_t>(sh_index(l, m))] = n;
      }
    }
  }
};

const NormTable& norms() {
  static const NormTable table;
  return table;
}

// Associated Legendre P_l^m(cos theta) for 0 <= m <= l <= degree and,
// optionally, d/dtheta. Stored at sh_index(l, m).
void legendre(int degree, double theta, double* p, double* dp) {
  const double x = std::cos(theta);
  const double s = std::sin(theta);

  double pmm = 1.0;       // (2m-1)!! s^m
  double dpmm = 0.0;
  double smm1 = 1.0;      // s^(m-1), valid for m >= 1
  double dfact = 1.0;     // (2m-1)!!
  for (int m = 0; m <= degree; ++m) {
    if (m > 0) {
      dfact *= (2.0 * m - 1.0);
      if (m > 1) smm1 *= s;
      pmm = dfact * smm1 * s;
      dpmm = dfact * m * smm1 * x;
    }
    p[sh_index(m, m)] = pmm;
    if (dp) dp[sh_index(m, m)] = dpmm;
    if (m == degree) break;

    double pl1 = (2.0 * m + 1.0) * x * pmm;
    double dpl1 = (2.0 * m + 1.0) * (-s * pmm + x * dpmm);
    p[sh_index(m + 1, m)] = pl1;
    if (dp) dp[sh_index(m + 1, m)] = dpl1;

    double pl2 = pmm;
    double dpl2 = dpmm;
    for (int l = m + 2; l <= degree; ++l) {
      const double pl = ((2.0 * l - 1.0) * x * pl1 - (l + m - 1.0) * pl2) / (l - m);
      const double dpl =
          ((2.0 * l - 1.0) * (-s * pl1 + x * dpl1) - (l + m - 1.0) * dpl2) / (l - m);
      p[sh_index(l, m)] = pl;
      if (dp) dp[sh_index(l, m)] = dpl;
      pl2 = pl1;
      dpl2 = dpl1;
      pl1 = pl;
      dpl1 = dpl;
    }
  }
}

void check_span(ShDegree degree, std::span<double> s, const char* what) {
  if (s.size() < degree.num_coeffs()) {
    throw std::invalid_argument(std::string("eval_basis: output span too small for ") + what);
  }
}

}  // namespace

ShDegree::ShDegree(int degree) : degree_(degree) {
  if (degree < 0 || degree > kMaxShDegree) {
    throw std::invalid_argument("sh degree must be in [0, " + std::to_string(kMaxShDegree) +
                                "], got " + std::to_string(degree));
  }
}

ShDegree ShDegree::from_coeff_count(std::size_t count) {
  for (int l = 0; l <= kMaxShDegree; ++l) {
    if (static_cast<std::size_t>((l + 1) * (l + 1)) == count) return ShDegree(l);
  }
  throw std::invalid_argument("sh coefficient count " + std::to_string(count) +
                              " is not a square (L+1)^2 with L <= 6");
}

void eval_basis(ShDegree degree, double theta, double phi, std::span<double> out) {
  check_span(degree, out, "values");
  const int lmax = degree.value();
  std::array<double, kMaxShCoeffs> p{};
  legendre(lmax, theta, p.data(), nullptr);
  const auto& k = norms().k;

  for (int l = 0; l <= lmax; ++l) out[sh_index(l, 0)] = k[sh_index(l, 0)] * p[sh_index(l, 0)];
  for (int m = 1; m <= lmax; ++m) {
    const double c = std::cos(m * phi);
    const double sn = std::sin(m * phi);
    for (int l = m; l <= lmax; ++l) {
      const double base = k[sh_index(l, m)] * p[sh_index(l, m)];
      out[sh_index(l, m)] = base * c;
      out[sh_index(l, -m)] = base * sn;
    }
  }
}

std::vector<double> eval_basis(ShDegree degree, double theta, double phi) {
  std::vector<double> out(degree.num_coeffs());
  eval_basis(degree, theta, phi, out);
  return out;
}

void eval_basis_grad(ShDegree degree, double theta, double phi, std::span<double> values,
                     std::span<double> d_theta, std::span<double> d_phi) {
  check_span(degree, values, "values");
  check_span(degree, d_theta, "d_theta");
  check_span(degree, d_phi, "d_phi");
  const int lmax = degree.value();
  std::array<double, kMaxShCoeffs> p{};
  std::array<double, kMaxShCoeffs> dp{};
  legendre(lmax, theta, p.data(), dp.data());
  const auto& k = norms().k;

  for (int l = 0; l <= lmax; ++l) {
    const int i = sh_index(l, 0);
    values[i] = k[i] * p[i];
    d_theta[i] = k[i] * dp[i];
    d_phi[i] = 0.0;
  }
  for (int m = 1; m <= lmax; ++m) {
    const double c = std::cos(m * phi);
    const double sn = std::sin(m * phi);
    for (int l = m; l <= lmax; ++l) {
      const int i = sh_index(l, m);
      const int j = sh_index(l, -m);
      const double base = k[i] * p[i];
      const double dbase = k[i] * dp[i];
      values[i] = base * c;
      values[j] = base * sn;
      d_theta[i] = dbase * c;
      d_theta[j] = dbase * sn;
      d_phi[i] = -m * base * sn;
      d_phi[j] = m * base * c;
    }
  }
}

ShGradient eval_basis_grad(ShDegree degree, double theta, double phi) {
  std::vector<double> values(degree.num_coeffs());
  ShGradient g{std::vector<double>(degree.num_coeffs()), std::vector<double>(degree.num_coeffs())};
  eval_basis_grad(degree, theta, phi, values, g.d_theta, g.d_phi);
  return g;
}

}  // namespace mash
