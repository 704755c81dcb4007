#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/kdtree.hpp"
#include "mash/losses.hpp"
#include "mash/model.hpp"
#include "mash/sampler.hpp"

namespace mash {

/// Fraction of targets that must be covered before the boundary term is enabled.
inline constexpr double kCoverageThreshold = 0.8;

struct LearningRates {
  double position = 2e-3;
  double rotvec = 2e-3;
  double sh = 5e-3;
  double mask = 5e-3;
};

struct IterationRecord {
  int iteration = 0;
  LossTerms terms;
  double total = 0.0;
  LossWeights weights;
  double coverage = 0.0;
  int stage = 1;
  double ms = 0.0;
};

struct FitConfig {
  std::size_t anchors = 400;
  int sh_degree = 2;
  int mask_degree = 3;
  int n_dir = kDefaultDirections;
  int n_bd = kDefaultBoundarySamples;
  /// Anchor offset from the surface; <= 0 selects 2x the mean point spacing.
  double d_init = 0.0;
  /// "Covered" radius; <= 0 selects 2x the mean point spacing.
  double coverage_tau = 0.0;
  int max_iters = 2000;
  /// Linear ramp lengths; <= 0 selects min(500, max_iters/4) and
  /// min(500, remaining/2) respectively.
  int stage1_ramp_iters = 0;
  int stage2_ramp_iters = 0;
  LearningRates lr;
  int convergence_window = 50;
  double convergence_tol = 1e-4;
  std::uint64_t seed = 0;
  std::size_t normal_neighbors = 16;
  std::function<void(const IterationRecord&)> on_iteration;
};

struct FitReport {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  /// First iteration run in stage 2, or -1.
  int stage2_start = -1;

  void write_csv(std::ostream& out) const;
};

struct FitResult {
  MashModel model;
  FitReport report;
};

/// Target point cloud with its spatial index.
class TargetCloud {
 public:
  explicit TargetCloud(std::vector<Vec3> points);

  const std::vector<Vec3>& points() const { return points_; }
  const KdTree& tree() const { return tree_; }
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<Vec3> points_;
  KdTree tree_;
};

/// Per-iteration ray selection (non-differentiable).
struct RaySelection {
  std::vector<std::vector<RayParam>> surface;
  std::vector<std::vector<RayParam>> boundary;

  std::size_t surface_count() const;
  std::size_t boundary_count() const;
};

RaySelection select_rays(const MashModel& model, std::span<const SphericalDir> presamples, int n_bd);

/// Raises a_0 by 0.5 (up to 100 times) for every anchor whose mask keeps no
/// ray, refreshing its selection. Returns the number of anchors touched.
std::size_t reinflate_empty_masks(MashModel& model, RaySelection& selection,
                                  std::span<const SphericalDir> presamples, int n_bd);

/// Nearest-neighbour assignments, indexed over the flattened (anchor-major)
/// surface and boundary samples.
struct Correspondences {
  std::vector<std::uint32_t> fit;       ///< surface sample -> target
  std::vector<std::uint32_t> coverage;  ///< target -> surface sample
  std::vector<std::uint32_t> boundary;  ///< boundary sample -> other anchors' boundary sample
};

/// Loss terms plus their gradients with respect to each sample position.
struct LossEvaluation {
  LossTerms terms;
  Correspondences correspondences;
  std::vector<double> coverage_distances;  ///< per target
  std::vector<Vec3> grad_fit;              ///< per surface sample
  std::vector<Vec3> grad_coverage;         ///< per surface sample
  std::vector<Vec3> grad_boundary;         ///< per boundary sample

  double coverage_fraction(double tau) const;
};

/// Samples the model under `selection` and evaluates L_f, L_c, L_b. When
/// `frozen` is given its assignments replace the nearest-neighbour search.
LossEvaluation evaluate_losses(const MashModel& model, const RaySelection& selection,
                               const TargetCloud& targets, const Correspondences* frozen = nullptr,
                               PatchOptions options = {});

/// Chain rule from per-sample gradients to the flattened parameter vector.
/// Throws std::runtime_error naming anchor and parameter on a non-finite entry.
std::vector<double> backpropagate(const MashModel& model, const RaySelection& selection,
                                  const LossEvaluation& eval, const LossWeights& weights,
                                  PatchOptions options = {});

/// Gradient of the weighted total loss for a fixed ray selection.
std::vector<double> loss_gradients(const MashModel& model, const RaySelection& selection,
                                   const TargetCloud& targets, const LossWeights& weights,
                                   const Correspondences* frozen = nullptr,
                                   PatchOptions options = {});

/// Rotation vector taking +z onto `direction`.
Vec3 rotvec_from_z(const Vec3& direction);

MashModel initialize(std::span<const Vec3> targets, const FitConfig& config);

/// Weight schedule of the two-stage optimisation.
class WeightSchedule {
 public:
  WeightSchedule(int max_iters, int stage1_ramp, int stage2_ramp);

  /// Call once per iteration, before weights(). Returns true on the stage switch.
  bool update(int iteration, double coverage);
  LossWeights weights(int iteration) const;
  int stage() const { return stage_; }
  int stage2_start() const { return stage2_start_; }
  /// True once both ramps have completed.
  bool settled(int iteration) const;

 private:
  int max_iters_;
  int stage1_ramp_;
  int stage2_ramp_config_;
  int stage2_ramp_ = 1;
  int stage_ = 1;
  int stage2_start_ = -1;
};

/// Bias-corrected adaptive moment estimation with per-parameter step sizes.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<double> step_sizes, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);
  long steps() const { return t_; }

 private:
  std::vector<double> lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Per-parameter step sizes for the flattened layout of `model`.
std::vector<double> parameter_step_sizes(const MashModel& model, const LearningRates& lr);

FitResult fit(std::span<const Vec3> targets, const FitConfig& config);

}  // namespace mash
