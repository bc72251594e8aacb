#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "attrloss/types.hpp"

namespace attrloss {

/// Cross-identity pairs whose attribute vectors lie within tau of each
/// other, in canonical (i < j) index order.
struct PairSelection {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  double tau = 0.0;
  std::optional<std::int64_t> cap;
};

/// Enumerates all index pairs i < j with labels_i != labels_j and
/// ||p_i - p_j|| < tau in lexicographic order. If more than `cap` qualify,
/// a uniform subset of size cap is drawn with a seeded Fisher-Yates partial
/// shuffle and re-sorted lexicographically.
PairSelection select_pairs(const BatchFeatures& batch, double tau,
                           std::optional<std::int64_t> cap, std::uint64_t rng_seed);

/// 0.5 * sum over selected pairs of ||(f_i - f_j) - G (p_i - p_j)||^2.
double attribute_loss_forward(const BatchFeatures& batch, const PairSelection& sel,
                              const Matrix& attr_map);

struct AttributeLossGrads {
  Matrix grad_features;  // M x K
  Matrix grad_attr_map;  // K x H
};

AttributeLossGrads attribute_loss_backward(const BatchFeatures& batch, const PairSelection& sel,
                                           const Matrix& attr_map);

enum class LossCombo { softmax, softmax_attr, softmax_center, softmax_center_attr };

bool combo_has_attr(LossCombo combo);
bool combo_has_center(LossCombo combo);

struct CombinedLossConfig {
  LossCombo combo = LossCombo::softmax;
  double lambda_attr = 0.0;
  double lambda_center = 0.0;
  double tau = 0.01;
  std::optional<std::int64_t> pair_cap;
  std::uint64_t pair_seed = 0;
};

/// Weighted joint loss L = L_s + lambda * L_a + lambda_c * L_c with
/// gradients of that same weighted objective. center_update is the raw
/// per-class direction; the trainer applies it with its own rate.
struct CombinedLossResult {
  double value = 0.0;
  double softmax_value = 0.0;
  double attr_value = 0.0;
  double center_value = 0.0;
  std::int64_t pair_count = 0;
  Matrix grad_features;        // M x K
  Matrix grad_w;               // K x C
  std::vector<double> grad_b;  // C
  Matrix grad_attr_map;        // K x H (already lambda-weighted)
  Matrix center_update;        // C x K (raw direction; empty if center disabled)
};

CombinedLossResult combined_loss(const BatchFeatures& batch, const ModelParams& params,
                                 const CombinedLossConfig& config);

}  // namespace attrloss
