#include "attrloss/attribute_loss.hpp"

#include <algorithm>
#include <numeric>

#include "attrloss/attributes.hpp"
#include "attrloss/losses.hpp"
#include "attrloss/parallel.hpp"
#include "attrloss/rng.hpp"

namespace attrloss {

PairSelection select_pairs(const BatchFeatures& batch, double tau,
                           std::optional<std::int64_t> cap, std::uint64_t rng_seed) {
  if (tau <= 0.0) throw DimensionError("select_pairs: tau must be positive");
  const std::int64_t m = batch.features.rows;

  PairSelection sel;
  sel.tau = tau;
  sel.cap = cap;
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = i + 1; j < m; ++j) {
      if (batch.labels[static_cast<std::size_t>(i)] == batch.labels[static_cast<std::size_t>(j)])
        continue;
      const double d = attribute_distance(batch.attributes.row(i), batch.attributes.row(j));
      if (d < tau) {
        sel.pairs.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
      }
    }
  }

  if (cap && static_cast<std::int64_t>(sel.pairs.size()) > *cap) {
    Rng rng(rng_seed);
    // Partial Fisher-Yates: the first `cap` slots end up a uniform subset.
    const std::size_t n = sel.pairs.size();
    const std::size_t take = static_cast<std::size_t>(*cap);
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(n - k));
      std::swap(sel.pairs[k], sel.pairs[pick]);
    }
    sel.pairs.resize(take);
    std::sort(sel.pairs.begin(), sel.pairs.end());
  }
  return sel;
}

namespace {

// residual for pair (i, j): (f_i - f_j) - G (p_i - p_j)
void pair_residual(const BatchFeatures& batch, const Matrix& g, std::int64_t i, std::int64_t j,
                   double* out) {
  const std::int64_t k = batch.features.cols;
  const std::int64_t h = batch.attributes.cols;
  const double* fi = batch.features.data.data() + i * k;
  const double* fj = batch.features.data.data() + j * k;
  const double* pi = batch.attributes.data.data() + i * h;
  const double* pj = batch.attributes.data.data() + j * h;
  for (std::int64_t d = 0; d < k; ++d) {
    double gp = 0.0;
    for (std::int64_t a = 0; a < h; ++a) gp += g(d, a) * (pi[a] - pj[a]);
    out[d] = (fi[d] - fj[d]) - gp;
  }
}

void check_attr_map(const BatchFeatures& batch, const Matrix& g) {
  if (g.rows != batch.features.cols || g.cols != batch.attributes.cols) {
    throw DimensionError("attribute loss: G must be K x H");
  }
}

}  // namespace

double attribute_loss_forward(const BatchFeatures& batch, const PairSelection& sel,
                              const Matrix& attr_map) {
  check_attr_map(batch, attr_map);
  const std::int64_t k = batch.features.cols;
  const std::int64_t n = static_cast<std::int64_t>(sel.pairs.size());
  std::vector<double> terms(static_cast<std::size_t>(n), 0.0);
  parallel_for(n, [&](std::int64_t p) {
    const auto [i, j] = sel.pairs[static_cast<std::size_t>(p)];
    std::vector<double> r(static_cast<std::size_t>(k));
    pair_residual(batch, attr_map, i, j, r.data());
    terms[static_cast<std::size_t>(p)] = 0.5 * dot(r, r);
  });
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

AttributeLossGrads attribute_loss_backward(const BatchFeatures& batch, const PairSelection& sel,
                                           const Matrix& attr_map) {
  check_attr_map(batch, attr_map);
  const std::int64_t m = batch.features.rows;
  const std::int64_t k = batch.features.cols;
  const std::int64_t h = batch.attributes.cols;
  const std::int64_t n = static_cast<std::int64_t>(sel.pairs.size());

  // Residuals are materialized once so both gradients accumulate from the
  // same values in pair-list order.
  Matrix residuals(n, k);
  parallel_for(n, [&](std::int64_t p) {
    const auto [i, j] = sel.pairs[static_cast<std::size_t>(p)];
    pair_residual(batch, attr_map, i, j, residuals.data.data() + p * k);
  });

  AttributeLossGrads out;
  out.grad_features = Matrix(m, k);
  // dL/df_i += r_p, dL/df_j -= r_p for each pair p = (i, j); each feature
  // row accumulates over its own pairs in list order.
  parallel_for(m, [&](std::int64_t row) {
    double* g = out.grad_features.data.data() + row * k;
    for (std::int64_t p = 0; p < n; ++p) {
      const auto [i, j] = sel.pairs[static_cast<std::size_t>(p)];
      if (i == row) {
        const double* r = residuals.data.data() + p * k;
        for (std::int64_t d = 0; d < k; ++d) g[d] += r[d];
      } else if (j == row) {
        const double* r = residuals.data.data() + p * k;
        for (std::int64_t d = 0; d < k; ++d) g[d] -= r[d];
      }
    }
  });

  // dL/dG = sum_p [G dp - df] dp^T = sum_p (-r_p) dp^T, entry-parallel with
  // the pair loop innermost and ordered.
  out.grad_attr_map = Matrix(k, h);
  parallel_for(k, [&](std::int64_t d) {
    double* grow = out.grad_attr_map.data.data() + d * h;
    for (std::int64_t p = 0; p < n; ++p) {
      const auto [i, j] = sel.pairs[static_cast<std::size_t>(p)];
      const double rd = residuals(p, d);
      const double* pi = batch.attributes.data.data() + i * h;
      const double* pj = batch.attributes.data.data() + j * h;
      for (std::int64_t a = 0; a < h; ++a) grow[a] -= rd * (pi[a] - pj[a]);
    }
  });
  return out;
}

bool combo_has_attr(LossCombo combo) {
  return combo == LossCombo::softmax_attr || combo == LossCombo::softmax_center_attr;
}

bool combo_has_center(LossCombo combo) {
  return combo == LossCombo::softmax_center || combo == LossCombo::softmax_center_attr;
}

CombinedLossResult combined_loss(const BatchFeatures& batch, const ModelParams& params,
                                 const CombinedLossConfig& config) {
  CombinedLossResult out;

  SoftmaxLossResult sm = softmax_loss(batch, params.classifier_w, params.classifier_b);
  out.softmax_value = sm.value;
  out.value = sm.value;
  out.grad_features = std::move(sm.grad_features);
  out.grad_w = std::move(sm.grad_w);
  out.grad_b = std::move(sm.grad_b);
  out.grad_attr_map = Matrix(params.attr_map.rows, params.attr_map.cols);

  // A term with weight zero contributes nothing anywhere, so disabling it
  // and weighting it by zero are the same training trajectory.
  if (combo_has_attr(config.combo) && config.lambda_attr != 0.0) {
    const PairSelection sel =
        select_pairs(batch, config.tau, config.pair_cap, config.pair_seed);
    out.pair_count = static_cast<std::int64_t>(sel.pairs.size());
    out.attr_value = attribute_loss_forward(batch, sel, params.attr_map);
    AttributeLossGrads ag = attribute_loss_backward(batch, sel, params.attr_map);
    out.value += config.lambda_attr * out.attr_value;
    add_scaled(out.grad_features, ag.grad_features, config.lambda_attr);
    add_scaled(out.grad_attr_map, ag.grad_attr_map, config.lambda_attr);
  }

  if (combo_has_center(config.combo) && config.lambda_center != 0.0) {
    CenterLossResult cl = center_loss(batch, params.centers);
    out.center_value = cl.value;
    out.value += config.lambda_center * cl.value;
    add_scaled(out.grad_features, cl.grad_features, config.lambda_center);
    out.center_update = std::move(cl.center_update);
  }

  return out;
}

}  // namespace attrloss
