#pragma once

#include <cstdint>
#include <vector>

#include "attrloss/attribute_loss.hpp"
#include "attrloss/mlp.hpp"
#include "attrloss/types.hpp"

namespace attrloss {

/// Step-decay schedule: base_rate divided by `decay` once per milestone
/// that the iteration count has reached.
struct LrSchedule {
  double base_rate = 0.1;
  std::vector<std::int64_t> milestones;
  double decay = 10.0;

  void validate() const;
  double rate_at(std::int64_t iteration) const;
};

struct ParamGrads {
  MlpGrads theta;
  Matrix classifier_w;
  std::vector<double> classifier_b;
  Matrix attr_map;
};

/// Plain SGD: every parameter is decremented by
/// (rate(iteration) / batch_size) * gradient.
void sgd_step(ModelParams& params, const ParamGrads& grads, const LrSchedule& schedule,
              std::int64_t iteration, std::int64_t batch_size);

}  // namespace attrloss
