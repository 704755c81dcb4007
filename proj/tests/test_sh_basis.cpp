#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/sh_basis.hpp"
#include "support/shapes.hpp"

namespace {

using mash::ShDegree;
using mash::kPi;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// P_l^m(x) = (1-x^2)^(m/2) d^m/dx^m P_l(x), with P_l expanded as an explicit
// polynomial 2^-l sum_k (-1)^k C(l,k) C(2l-2k,l) x^(l-2k). No recurrences.
double legendre_poly(int l, int m, double x) {
  double deriv = 0.0;
  for (int k = 0; 2 * k <= l; ++k) {
    const int power = l - 2 * k;
    if (power < m) continue;
    const double c = std::pow(-1.0, k) * binomial(l, k) * binomial(2 * l - 2 * k, l) / std::pow(2.0, l);
    deriv += c * factorial(power) / factorial(power - m) * std::pow(x, power - m);
  }
  return std::pow(1.0 - x * x, 0.5 * m) * deriv;
}

std::vector<double> slow_basis(int degree, double theta, double phi) {
  std::vector<double> out;
  for (int l = 0; l <= degree; ++l) {
    for (int m = -l; m <= l; ++m) {
      const int am = std::abs(m);
      const double n = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * factorial(l - am) / factorial(l + am));
      const double base = n * legendre_poly(l, am, std::cos(theta));
      if (m > 0) out.push_back(std::sqrt(2.0) * base * std::cos(am * phi));
      else if (m < 0) out.push_back(std::sqrt(2.0) * base * std::sin(am * phi));
      else out.push_back(base);
    }
  }
  return out;
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

TEST(ShBasis, ConstantBand) {
  const auto y = mash::eval_basis(ShDegree(0), 1.1, 2.2);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_NEAR(y[0], 0.28209479177387814, 1e-15);
}

TEST(ShBasis, FirstBandAtPole) {
  const auto y = mash::eval_basis(ShDegree(1), 0.0, 0.0);
  ASSERT_EQ(y.size(), 4u);
  EXPECT_EQ(y[mash::sh_index(1, -1)], 0.0);
  EXPECT_NEAR(y[mash::sh_index(1, 1)], 0.0, 1e-300);
  EXPECT_NEAR(y[mash::sh_index(1, 0)], std::sqrt(3.0 / (4.0 * kPi)), 1e-15);
  EXPECT_NEAR(y[mash::sh_index(1, 0)], 0.488603, 1e-6);
}

TEST(ShBasis, SecondBandMatchesPolynomialOracle) {
  const double theta = kPi / 3.0, phi = kPi / 5.0;
  // Frozen from an exact symbolic evaluation.
  const double frozen[9] = {0.28209479177387814347, 0.24871673752980245708, 0.24430125595145996079,
                            0.34232922085459430833, 0.38965323910599004126, 0.27807376612930571007,
                            -0.078847891313130001508, 0.38273570425770576177, 0.12660601208648630038};
  const auto y = mash::eval_basis(ShDegree(2), theta, phi);
  const auto oracle = slow_basis(2, theta, phi);
  ASSERT_EQ(y.size(), 9u);
  for (int i = 0; i < 9; ++i) {
    EXPECT_NEAR(y[i], oracle[i], 1e-14) << i;
    EXPECT_NEAR(y[i], frozen[i], 1e-14) << i;
  }
}

TEST(ShBasis, AllDegreesMatchPolynomialOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ut(0.0, kPi), up(0.0, mash::kTwoPi);
  for (int degree = 0; degree <= mash::kMaxShDegree; ++degree) {
    for (int trial = 0; trial < 50; ++trial) {
      const double theta = ut(rng), phi = up(rng);
      const auto y = mash::eval_basis(ShDegree(degree), theta, phi);
      const auto oracle = slow_basis(degree, theta, phi);
      ASSERT_EQ(y.size(), oracle.size());
      for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], oracle[i], 1e-12);
    }
  }
}

TEST(ShBasis, DegreeValidation) {
  EXPECT_THROW(ShDegree(-1), std::invalid_argument);
  EXPECT_THROW(ShDegree(7), std::invalid_argument);
  EXPECT_EQ(ShDegree(2).num_coeffs(), 9u);
  EXPECT_EQ(ShDegree::from_coeff_count(16).value(), 3);
  EXPECT_THROW(ShDegree::from_coeff_count(10), std::invalid_argument);
}

TEST(ShBasisGrad, ConstantBandHasZeroGradient) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ut(0.0, kPi), up(0.0, mash::kTwoPi);
  for (int i = 0; i < 100; ++i) {
    const auto g = mash::eval_basis_grad(ShDegree(0), ut(rng), up(rng));
    EXPECT_EQ(g.d_theta[0], 0.0);
    EXPECT_EQ(g.d_phi[0], 0.0);
  }
}

TEST(ShBasisGrad, ClosedFormFirstBand) {
  const auto g = mash::eval_basis_grad(ShDegree(1), kPi / 4.0, 0.0);
  EXPECT_NEAR(g.d_theta[mash::sh_index(1, 0)], -std::sqrt(3.0 / (4.0 * kPi)) * std::sin(kPi / 4.0), 1e-15);
}

// Central differences with h = 1e-6 carry about 1e-10 of absolute rounding
// noise, so the relative error is taken against max(|a|, |fd|, 1e-2).
void check_gradients_against_fd(int degree, int count, double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, kPi), up(0.0, mash::kTwoPi);
  const ShDegree d(degree);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < count; ++trial) {
    const double theta = ut(rng), phi = up(rng);
    const auto g = mash::eval_basis_grad(d, theta, phi);
    const auto tp = mash::eval_basis(d, theta + h, phi), tm = mash::eval_basis(d, theta - h, phi);
    const auto pp = mash::eval_basis(d, theta, phi + h), pm = mash::eval_basis(d, theta, phi - h);
    for (std::size_t i = 0; i < d.num_coeffs(); ++i) {
      worst = std::max(worst, rel_err(g.d_theta[i], (tp[i] - tm[i]) / (2 * h), 1e-2));
      worst = std::max(worst, rel_err(g.d_phi[i], (pp[i] - pm[i]) / (2 * h), 1e-2));
    }
  }
  EXPECT_LT(worst, tol) << "degree " << degree;
}

TEST(ShBasisGrad, SecondBandMatchesFiniteDifferences) { check_gradients_against_fd(2, 200, 1e-6, 11); }

TEST(ShBasisGrad, ThousandRandomDirections) {
  for (int degree = 0; degree <= mash::kMaxShDegree; ++degree)
    check_gradients_against_fd(degree, 1000, 1e-5, 100 + degree);
}

TEST(ShBasisGrad, FiniteAtPoles) {
  const double h = 1e-6;
  for (double theta : {0.0, kPi}) {
    for (double phi : {0.0, 0.7, 3.0}) {
      const auto g = mash::eval_basis_grad(ShDegree(6), theta, phi);
      // The basis is analytic in theta through the poles, so a central
      // difference across the pole is still a valid reference.
      const auto tp = mash::eval_basis(ShDegree(6), theta + h, phi);
      const auto tm = mash::eval_basis(ShDegree(6), theta - h, phi);
      for (std::size_t i = 0; i < g.d_theta.size(); ++i) {
        ASSERT_TRUE(std::isfinite(g.d_theta[i]));
        ASSERT_TRUE(std::isfinite(g.d_phi[i]));
        EXPECT_NEAR(g.d_theta[i], (tp[i] - tm[i]) / (2 * h), 1e-7) << theta << " " << i;
      }
    }
  }
}

TEST(ShBasis, ContinuousAcrossAzimuthWrap) {
  for (double theta : {0.3, 1.2, 2.9}) {
    const auto a = mash::eval_basis(ShDegree(6), theta, 0.0);
    const auto b = mash::eval_basis(ShDegree(6), theta, mash::kTwoPi - 1e-12);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(ShBasis, MonteCarloOrthonormality) {
  const ShDegree d(2);
  const int n = 1'000'000;
  std::mt19937_64 rng(2024);
  std::vector<double> gram(81, 0.0);
  std::vector<double> y(9);
  for (int s = 0; s < n; ++s) {
    const mash::Vec3 u = mash::testing::random_unit(rng);
    const double theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
    const double phi = mash::wrap_two_pi(std::atan2(u.y(), u.x()));
    mash::eval_basis(d, theta, phi, y);
    for (int i = 0; i < 9; ++i)
      for (int j = i; j < 9; ++j) gram[i * 9 + j] += y[i] * y[j];
  }
  for (int i = 0; i < 9; ++i) {
    for (int j = i; j < 9; ++j) {
      const double inner = gram[i * 9 + j] * 4.0 * kPi / n;
      EXPECT_NEAR(inner, i == j ? 1.0 : 0.0, 5e-3) << i << "," << j;
    }
  }
}

}  // namespace
