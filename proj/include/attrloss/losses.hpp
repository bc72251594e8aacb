#pragma once

#include "attrloss/types.hpp"

namespace attrloss {

struct SoftmaxLossResult {
  double value = 0.0;
  Matrix grad_features;          // M x K
  Matrix grad_w;                 // K x C
  std::vector<double> grad_b;    // C
};

struct CenterLossResult {
  double value = 0.0;
  Matrix grad_features;  // M x K, row i = f_i - c_{y_i}
  Matrix center_update;  // C x K, row j = sum_{y_i=j}(c_j - f_i) / (1 + count_j)
};

struct AngularSoftmaxLossResult {
  double value = 0.0;
  Matrix grad_features;  // M x K
  Matrix grad_w;         // K x C
  // Samples whose scaled target angle margin*theta exceeded pi; the cosine
  // is no longer monotone there and callers may want to know.
  std::int64_t nonmonotone_count = 0;
};

/// Summed (not averaged) cross-entropy over the batch with max-subtracted
/// logits w_j^T f_i + b_j.
SoftmaxLossResult softmax_loss(const BatchFeatures& batch, const Matrix& w,
                               std::span<const double> b);

/// 0.5 * sum_i ||f_i - c_{y_i}||^2 plus the per-class center update
/// direction; the trainer applies the update with its own rate.
CenterLossResult center_loss(const BatchFeatures& batch, const Matrix& centers);

/// Multiplicative angular-margin softmax: the target logit is
/// ||f|| * cos(margin * theta_y) with theta_y = arccos of the clamped
/// feature/weight cosine; non-target logits are ||f|| * cos(theta_j).
/// margin = 1 reduces to softmax_loss with zero bias.
AngularSoftmaxLossResult angular_softmax_loss(const BatchFeatures& batch, const Matrix& w,
                                              int margin);

}  // namespace attrloss
