#include "mash/fitting.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "mash/log.hpp"
#include "mash/parallel.hpp"
#include "mash/point_utils.hpp"

namespace mash {
namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

// d/dp |p - q| with a zero subgradient at coincidence.
Vec3 unit_or_zero(const Vec3& d, double len) {
  return len > 0.0 ? Vec3(d / len) : Vec3::Zero();
}

std::vector<std::size_t> offsets_of(const std::vector<std::vector<RayParam>>& per_anchor) {
  std::vector<std::size_t> off(per_anchor.size() + 1, 0);
  for (std::size_t i = 0; i < per_anchor.size(); ++i) off[i + 1] = off[i] + per_anchor[i].size();
  return off;
}

}  // namespace

TargetCloud::TargetCloud(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("empty point set");
  tree_.build(points_);
}

std::size_t RaySelection::surface_count() const {
  std::size_t n = 0;
  for (const auto& s : surface) n += s.size();
  return n;
}

std::size_t RaySelection::boundary_count() const {
  std::size_t n = 0;
  for (const auto& s : boundary) n += s.size();
  return n;
}

RaySelection select_rays(const MashModel& model, std::span<const SphericalDir> presamples,
                         int n_bd) {
  RaySelection sel;
  sel.surface.resize(model.size());
  sel.boundary.resize(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    sel.surface[i] = filter_in_mask(model.anchors[i], presamples);
    sel.boundary[i] = boundary_rays(model.anchors[i], n_bd);
  }
  return sel;
}

std::size_t reinflate_empty_masks(MashModel& model, RaySelection& selection,
                                  std::span<const SphericalDir> presamples, int n_bd) {
  std::size_t changed = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (!selection.surface[i].empty()) continue;
    ++changed;
    for (int tries = 0; selection.surface[i].empty() && tries < 100; ++tries) {
      model.anchors[i].mask_coeffs[0] += 0.5;
      selection.surface[i] = filter_in_mask(model.anchors[i], presamples);
    }
    selection.boundary[i] = boundary_rays(model.anchors[i], n_bd);
  }
  return changed;
}

double LossEvaluation::coverage_fraction(double tau) const {
  if (coverage_distances.empty()) return 0.0;
  std::size_t covered = 0;
  for (double d : coverage_distances) covered += d < tau ? 1 : 0;
  return static_cast<double>(covered) / static_cast<double>(coverage_distances.size());
}

LossEvaluation evaluate_losses(const MashModel& model, const RaySelection& selection,
                               const TargetCloud& targets, const Correspondences* frozen,
                               PatchOptions options) {
  const std::size_t m = model.size();
  if (selection.surface.size() != m || selection.boundary.size() != m)
    throw std::invalid_argument("ray selection does not match the model");

  const auto surf_off = offsets_of(selection.surface);
  const auto bd_off = offsets_of(selection.boundary);
  const std::size_t n_surf = surf_off.back();
  const std::size_t n_bd = bd_off.back();
  if (n_surf == 0) throw std::invalid_argument("empty point set: no in-mask samples");

  std::vector<Vec3> surf(n_surf);
  std::vector<Vec3> bd(n_bd);
  std::vector<std::uint32_t> bd_owner(n_bd);
  parallel_for(m, [&](std::size_t i) {
    const PatchEvaluator patch(model.anchors[i], options);
    for (std::size_t k = 0; k < selection.surface[i].size(); ++k)
      surf[surf_off[i] + k] = patch.point(selection.surface[i][k]);
    for (std::size_t k = 0; k < selection.boundary[i].size(); ++k) {
      bd[bd_off[i] + k] = patch.point(selection.boundary[i][k]);
      bd_owner[bd_off[i] + k] = static_cast<std::uint32_t>(i);
    }
  });

  if (frozen) {
    if (frozen->fit.size() != n_surf || frozen->coverage.size() != targets.size() ||
        frozen->boundary.size() != (m >= 2 ? n_bd : 0))
      throw std::invalid_argument("frozen correspondences do not match the sample layout");
  }

  LossEvaluation ev;
  ev.grad_fit.assign(n_surf, Vec3::Zero());
  ev.grad_coverage.assign(n_surf, Vec3::Zero());
  ev.grad_boundary.assign(n_bd, Vec3::Zero());
  const auto& q = targets.points();

  // Fitting term: samples -> targets.
  ev.correspondences.fit.resize(n_surf);
  std::vector<double> fit_dist(n_surf);
  parallel_for(n_surf, [&](std::size_t s) {
    const std::uint32_t j =
        frozen ? frozen->fit[s] : static_cast<std::uint32_t>(targets.tree().nearest(surf[s]).index);
    ev.correspondences.fit[s] = j;
    const Vec3 d = surf[s] - q[j];
    fit_dist[s] = d.norm();
    ev.grad_fit[s] = unit_or_zero(d, fit_dist[s]) / static_cast<double>(n_surf);
  });
  ev.terms.fit = std::accumulate(fit_dist.begin(), fit_dist.end(), 0.0) /
                 static_cast<double>(n_surf);

  // Coverage term: targets -> samples.
  ev.correspondences.coverage.resize(q.size());
  ev.coverage_distances.resize(q.size());
  {
    KdTree sample_tree;
    if (!frozen) sample_tree.build(surf);
    parallel_for(q.size(), [&](std::size_t t) {
      const std::uint32_t s = frozen ? frozen->coverage[t]
                                     : static_cast<std::uint32_t>(sample_tree.nearest(q[t]).index);
      ev.correspondences.coverage[t] = s;
      ev.coverage_distances[t] = (surf[s] - q[t]).norm();
    });
  }
  const double inv_q = 1.0 / static_cast<double>(q.size());
  double cover_sum = 0.0;
  for (std::size_t t = 0; t < q.size(); ++t) {
    const std::uint32_t s = ev.correspondences.coverage[t];
    cover_sum += ev.coverage_distances[t];
    ev.grad_coverage[s] += unit_or_zero(surf[s] - q[t], ev.coverage_distances[t]) * inv_q;
  }
  ev.terms.coverage = cover_sum * inv_q;

  // Boundary term: each anchor's boundary ring -> union of the other rings.
  if (m >= 2) {
    ev.correspondences.boundary.resize(n_bd);
    std::vector<double> bd_dist(n_bd);
    KdTree bd_tree;
    if (!frozen) bd_tree.build(bd);
    parallel_for(n_bd, [&](std::size_t b) {
      std::uint32_t o;
      if (frozen) {
        o = frozen->boundary[b];
      } else {
        const std::uint32_t own = bd_owner[b];
        o = static_cast<std::uint32_t>(
            bd_tree.nearest_if(bd[b], [&](std::size_t j) { return bd_owner[j] != own; }).index);
      }
      ev.correspondences.boundary[b] = o;
      bd_dist[b] = (bd[b] - bd[o]).norm();
    });
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t count = bd_off[i + 1] - bd_off[i];
      const double w = 1.0 / (static_cast<double>(m) * static_cast<double>(count));
      double sum = 0.0;
      for (std::size_t b = bd_off[i]; b < bd_off[i + 1]; ++b) {
        sum += bd_dist[b];
        const std::uint32_t o = ev.correspondences.boundary[b];
        const Vec3 g = unit_or_zero(bd[b] - bd[o], bd_dist[b]) * w;
        ev.grad_boundary[b] += g;
        ev.grad_boundary[o] -= g;
      }
      total += sum / static_cast<double>(count);
    }
    ev.terms.boundary = total / static_cast<double>(m);
  }
  return ev;
}

std::vector<double> backpropagate(const MashModel& model, const RaySelection& selection,
                                  const LossEvaluation& eval, const LossWeights& weights,
                                  PatchOptions options) {
  const std::size_t m = model.size();
  const std::size_t per = model.params_per_anchor();
  const auto surf_off = offsets_of(selection.surface);
  const auto bd_off = offsets_of(selection.boundary);
  if (eval.grad_fit.size() != surf_off.back() || eval.grad_boundary.size() != bd_off.back())
    throw std::invalid_argument("loss evaluation does not match the ray selection");

  std::vector<double> grad(m * per, 0.0);
  parallel_for(m, [&](std::size_t i) {
    const PatchEvaluator patch(model.anchors[i], options);
    std::span<double> g(grad.data() + i * per, per);
    for (std::size_t k = 0; k < selection.surface[i].size(); ++k) {
      const std::size_t s = surf_off[i] + k;
      const Vec3 gp = weights.fit * eval.grad_fit[s] + weights.coverage * eval.grad_coverage[s];
      if (gp != Vec3::Zero()) patch.backprop(selection.surface[i][k], gp, g);
    }
    if (weights.boundary != 0.0) {
      for (std::size_t k = 0; k < selection.boundary[i].size(); ++k) {
        const Vec3 gp = weights.boundary * eval.grad_boundary[bd_off[i] + k];
        if (gp != Vec3::Zero()) patch.backprop(selection.boundary[i][k], gp, g);
      }
    }
  });

  for (std::size_t idx = 0; idx < grad.size(); ++idx) {
    if (!std::isfinite(grad[idx])) {
      throw std::runtime_error("non-finite gradient at anchor " + std::to_string(idx / per) +
                               ", parameter " + std::to_string(idx % per));
    }
  }
  return grad;
}

std::vector<double> loss_gradients(const MashModel& model, const RaySelection& selection,
                                   const TargetCloud& targets, const LossWeights& weights,
                                   const Correspondences* frozen, PatchOptions options) {
  const LossEvaluation ev = evaluate_losses(model, selection, targets, frozen, options);
  return backpropagate(model, selection, ev, weights, options);
}

Vec3 rotvec_from_z(const Vec3& direction) {
  const Vec3 t = direction.normalized();
  const Vec3 axis = Vec3::UnitZ().cross(t);
  const double s = axis.norm();
  const double c = t.z();
  if (s < 1e-12) return c > 0.0 ? Vec3::Zero() : Vec3(kPi, 0.0, 0.0);
  return axis / s * std::atan2(s, c);
}

MashModel initialize(std::span<const Vec3> targets, const FitConfig& config) {
  if (config.anchors < 1) throw std::invalid_argument("anchor count must be >= 1");
  if (targets.size() < config.anchors)
    throw std::invalid_argument("point cloud has " + std::to_string(targets.size()) +
                                " points, fewer than the " + std::to_string(config.anchors) +
                                " requested anchors");
  const ShDegree degree(config.sh_degree);
  MashModel model = MashModel::zeros(config.anchors, degree, config.mask_degree, config.n_dir);

  const KdTree tree(targets);
  double d_init = config.d_init;
  if (d_init <= 0.0) {
    const double spacing = targets.size() >= 2 ? mean_nn_spacing(targets, tree) : 0.0;
    d_init = 2.0 * spacing;
  }
  if (!(d_init > 0.0)) d_init = 1e-3;  // every target point coincides

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
  const auto chosen = farthest_point_sampling(targets, config.anchors, pick(rng));
  const Vec3 center = centroid(targets);
  const std::size_t k = std::min(config.normal_neighbors, targets.size());
  const double c00 = d_init / kY00;

  for (std::size_t a = 0; a < chosen.size(); ++a) {
    const Vec3& source = targets[chosen[a]];
    Vec3 n = k >= 3 ? estimate_normal(targets, tree, chosen[a], k, center) : Vec3::UnitZ();
    if (!n.allFinite() || n.squaredNorm() < 0.5) n = Vec3::UnitZ();
    Anchor& anchor = model.anchors[a];
    anchor.position = source + d_init * n;
    anchor.rotvec = rotvec_from_z(-n);
    anchor.sh_coeffs[0] = c00;
  }
  return model;
}

WeightSchedule::WeightSchedule(int max_iters, int stage1_ramp, int stage2_ramp)
    : max_iters_(max_iters),
      stage1_ramp_(stage1_ramp > 0 ? stage1_ramp : std::max(1, std::min(500, max_iters / 4))),
      stage2_ramp_config_(stage2_ramp) {}

bool WeightSchedule::update(int iteration, double coverage) {
  if (stage_ == 1 && coverage >= kCoverageThreshold) {
    stage_ = 2;
    stage2_start_ = iteration;
    stage2_ramp_ = stage2_ramp_config_ > 0
                       ? stage2_ramp_config_
                       : std::max(1, std::min(500, (max_iters_ - iteration) / 2));
    return true;
  }
  return false;
}

LossWeights WeightSchedule::weights(int iteration) const {
  LossWeights w;
  w.fit = 1.0;
  w.coverage = 0.5 + 0.5 * std::min(1.0, static_cast<double>(iteration) / stage1_ramp_);
  w.boundary = stage_ == 2 ? std::min(1.0, static_cast<double>(iteration - stage2_start_) /
                                               stage2_ramp_)
                           : 0.0;
  return w;
}

bool WeightSchedule::settled(int iteration) const {
  return stage_ == 2 && iteration >= stage1_ramp_ && iteration - stage2_start_ >= stage2_ramp_;
}

AdamOptimizer::AdamOptimizer(std::vector<double> step_sizes, double beta1, double beta2,
                             double eps)
    : lr_(std::move(step_sizes)),
      m_(lr_.size(), 0.0),
      v_(lr_.size(), 0.0),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != lr_.size() || grad.size() != lr_.size())
    throw std::invalid_argument("adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_[i] * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

std::vector<double> parameter_step_sizes(const MashModel& model, const LearningRates& lr) {
  const std::size_t n_sh = ShDegree(model.sh_degree).num_coeffs();
  const std::size_t n_mask = static_cast<std::size_t>(2 * model.mask_degree + 1);
  std::vector<double> out;
  out.reserve(model.param_count());
  for (std::size_t a = 0; a < model.size(); ++a) {
    out.insert(out.end(), 3, lr.position);
    out.insert(out.end(), 3, lr.rotvec);
    out.insert(out.end(), n_sh, lr.sh);
    out.insert(out.end(), n_mask, lr.mask);
  }
  return out;
}

void FitReport::write_csv(std::ostream& out) const {
  out << "iteration,L_f,L_c,L_b,L,wf,wc,wb,coverage,stage,ms\n";
  const auto old_precision = out.precision(17);
  for (const IterationRecord& r : iterations) {
    out << r.iteration << ',' << r.terms.fit << ',' << r.terms.coverage << ','
        << r.terms.boundary << ',' << r.total << ',' << r.weights.fit << ','
        << r.weights.coverage << ',' << r.weights.boundary << ',' << r.coverage << ','
        << r.stage << ',' << r.ms << '\n';
  }
  out.precision(old_precision);
}

FitResult fit(std::span<const Vec3> targets_in, const FitConfig& config) {
  if (config.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  for (const Vec3& p : targets_in)
    if (!p.allFinite()) throw std::invalid_argument("non-finite input point");

  const TargetCloud targets(std::vector<Vec3>(targets_in.begin(), targets_in.end()));
  double tau = config.coverage_tau;
  if (tau <= 0.0) {
    tau = targets.size() >= 2 ? 2.0 * mean_nn_spacing(targets.points(), targets.tree()) : 0.0;
    if (!(tau > 0.0)) tau = 1e-3;
  }

  FitResult result;
  result.model = initialize(targets.points(), config);
  if (config.anchors < 2) log_warning("boundary loss needs at least two anchors; it stays 0");
  MashModel& model = result.model;
  const auto presamples = fibonacci_presample(config.n_dir);
  AdamOptimizer adam(parameter_step_sizes(model, config.lr));
  WeightSchedule schedule(config.max_iters, config.stage1_ramp_iters, config.stage2_ramp_iters);
  std::vector<double> params = model.flatten();
  std::vector<double> settled_losses;
  const std::size_t window = static_cast<std::size_t>(std::max(1, config.convergence_window));

  for (int it = 0; it < config.max_iters; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    RaySelection selection = select_rays(model, presamples, config.n_bd);
    if (reinflate_empty_masks(model, selection, presamples, config.n_bd) > 0)
      params = model.flatten();

    const LossEvaluation eval = evaluate_losses(model, selection, targets);
    const double coverage = eval.coverage_fraction(tau);
    schedule.update(it, coverage);
    const LossWeights weights = schedule.weights(it);
    const std::vector<double> grad = backpropagate(model, selection, eval, weights);

    adam.step(params, grad);
    model.unflatten(params);
    for (Anchor& a : model.anchors) canonicalize_rotvec(a.rotvec);
    params = model.flatten();

    IterationRecord rec;
    rec.iteration = it;
    rec.terms = eval.terms;
    rec.total = total_loss(eval.terms, weights);
    rec.weights = weights;
    rec.coverage = coverage;
    rec.stage = schedule.stage();
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.report.iterations.push_back(rec);
    if (config.on_iteration) config.on_iteration(rec);

    if (schedule.settled(it)) {
      settled_losses.push_back(rec.total);
      if (settled_losses.size() >= 2 * window) {
        const auto end = settled_losses.end();
        const double recent =
            std::accumulate(end - static_cast<long>(window), end, 0.0) / static_cast<double>(window);
        const double previous =
            std::accumulate(end - 2 * static_cast<long>(window), end - static_cast<long>(window), 0.0) /
            static_cast<double>(window);
        if (std::abs(recent - previous) <= config.convergence_tol * std::abs(previous)) {
          result.report.converged = true;
          break;
        }
      }
    }
  }
  result.report.stage2_start = schedule.stage2_start();
  return result;
}

}  // namespace mash
