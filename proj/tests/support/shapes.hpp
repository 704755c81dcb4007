#pragma once

// Shape generators and brute-force oracles shared by the test suites. Nothing
// here calls into the spatial index or the loss code it is used to check.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/model.hpp"

namespace mash::testing {

std::vector<Vec3> sample_sphere(std::size_t n, double radius, std::uint64_t seed);
std::vector<Vec3> sample_cube(std::size_t n, double edge, std::uint64_t seed);
/// Area-uniform samples of a torus around the z axis.
std::vector<Vec3> sample_torus(std::size_t n, double major, double minor, std::uint64_t seed);

std::vector<Vec3> random_points(std::size_t n, double half_extent, std::mt19937_64& rng);
Vec3 random_unit(std::mt19937_64& rng);

/// Anchor with small random coefficients that keeps patches well-conditioned.
Anchor random_anchor(ShDegree degree, int mask_degree, std::mt19937_64& rng);
MashModel random_model(std::size_t anchors, ShDegree degree, int mask_degree, int n_dir,
                       std::mt19937_64& rng);

// O(|A||B|) references.
double brute_nn_dist(const Vec3& p, std::span<const Vec3> set);
std::size_t brute_nn_index(const Vec3& p, std::span<const Vec3> set);
double brute_directed_mean(std::span<const Vec3> from, std::span<const Vec3> to);
double brute_directed_mean_sq(std::span<const Vec3> from, std::span<const Vec3> to);
double brute_directed_max(std::span<const Vec3> from, std::span<const Vec3> to);
double brute_within_fraction(std::span<const Vec3> from, std::span<const Vec3> to, double tau);

}  // namespace mash::testing
