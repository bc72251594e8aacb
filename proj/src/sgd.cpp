#include "attrloss/sgd.hpp"

namespace attrloss {

void LrSchedule::validate() const {
  if (base_rate <= 0.0) throw ConfigError("LrSchedule: base rate must be positive");
  if (decay <= 0.0) throw ConfigError("LrSchedule: decay must be positive");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) {
      throw ConfigError("LrSchedule: milestones must be strictly increasing");
    }
  }
}

double LrSchedule::rate_at(std::int64_t iteration) const {
  double r = base_rate;
  for (std::int64_t m : milestones) {
    if (iteration >= m) r /= decay;
  }
  return r;
}

void sgd_step(ModelParams& params, const ParamGrads& grads, const LrSchedule& schedule,
              std::int64_t iteration, std::int64_t batch_size) {
  if (batch_size <= 0) throw DimensionError("sgd_step: batch size must be positive");
  const double step = -schedule.rate_at(iteration) / static_cast<double>(batch_size);

  if (grads.theta.weights.size() != params.theta.weights.size()) {
    throw DimensionError("sgd_step: layer gradient count mismatch");
  }
  for (std::size_t l = 0; l < params.theta.weights.size(); ++l) {
    add_scaled(params.theta.weights[l], grads.theta.weights[l], step);
    add_scaled(std::span<double>(params.theta.biases[l]),
               std::span<const double>(grads.theta.biases[l]), step);
  }
  add_scaled(params.classifier_w, grads.classifier_w, step);
  add_scaled(std::span<double>(params.classifier_b), std::span<const double>(grads.classifier_b),
             step);
  add_scaled(params.attr_map, grads.attr_map, step);
}

}  // namespace attrloss
