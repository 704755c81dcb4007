#include "support/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mash::testing {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

double frozen_total(const MashModel& model, const RaySelection& selection,
                    const TargetCloud& targets, const Correspondences& frozen,
                    const LossWeights& weights) {
  return total_loss(evaluate_losses(model, selection, targets, &frozen).terms, weights);
}

GradCheckResult check_gradient(const MashModel& model, const RaySelection& selection,
                               const TargetCloud& targets, const LossWeights& weights,
                               double h) {
  const LossEvaluation base = evaluate_losses(model, selection, targets);
  const Correspondences& frozen = base.correspondences;
  const std::vector<double> grad = loss_gradients(model, selection, targets, weights, &frozen);
  std::vector<double> params = model.flatten();
  MashModel probe = model;
  GradCheckResult out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    probe.unflatten(params);
    const double plus = frozen_total(probe, selection, targets, frozen, weights);
    params[i] = saved - h;
    probe.unflatten(params);
    const double minus = frozen_total(probe, selection, targets, frozen, weights);
    params[i] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double rel = relative_error(grad[i], numeric);
    if (rel > out.worst_rel || out.checked == 0) {
      out.worst_rel = rel;
      out.worst_index = i;
      out.analytic = grad[i];
      out.numeric = numeric;
    }
    ++out.checked;
  }
  return out;
}

}  // namespace mash::testing
