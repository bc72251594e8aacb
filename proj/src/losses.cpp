#include "attrloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "attrloss/kernels.hpp"
#include "attrloss/parallel.hpp"

namespace attrloss {

namespace {

// Per-sample terms are written to slot i and summed in index order
// afterwards, keeping the result independent of the worker count.
double ordered_sum(const std::vector<double>& terms) {
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

constexpr double kCosineClamp = 1e-7;

}  // namespace

SoftmaxLossResult softmax_loss(const BatchFeatures& batch, const Matrix& w,
                               std::span<const double> b) {
  const std::int64_t m = batch.features.rows;
  const std::int64_t k = batch.features.cols;
  const std::int64_t c = w.cols;
  if (w.rows != k) throw DimensionError("softmax_loss: W rows != feature dim");
  if (static_cast<std::int64_t>(b.size()) != c) throw DimensionError("softmax_loss: bias length != C");
  validate_batch(batch, c);

  // logits(i, j) = w_j . f_i + b_j
  Matrix logits = kernels::matmul(batch.features, w);
  parallel_for(m, [&](std::int64_t i) {
    double* row = logits.data.data() + i * c;
    for (std::int64_t j = 0; j < c; ++j) row[j] += b[static_cast<std::size_t>(j)];
  });

  SoftmaxLossResult out;
  Matrix dlogits(m, c);  // softmax(i) - onehot(y_i)
  std::vector<double> terms(static_cast<std::size_t>(m), 0.0);
  std::vector<char> bad(static_cast<std::size_t>(m), 0);

  parallel_for(m, [&](std::int64_t i) {
    const double* row = logits.data.data() + i * c;
    double mx = row[0];
    for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    if (!std::isfinite(mx)) {
      bad[static_cast<std::size_t>(i)] = 1;
      return;
    }
    double z = 0.0;
    double* drow = dlogits.data.data() + i * c;
    for (std::int64_t j = 0; j < c; ++j) {
      drow[j] = std::exp(row[j] - mx);
      z += drow[j];
    }
    const std::int64_t y = batch.labels[static_cast<std::size_t>(i)];
    terms[static_cast<std::size_t>(i)] = std::log(z) + mx - row[y];
    const double inv = 1.0 / z;
    for (std::int64_t j = 0; j < c; ++j) drow[j] *= inv;
    drow[y] -= 1.0;
  });
  for (std::size_t i = 0; i < bad.size(); ++i) {
    if (bad[i]) throw NumericError("softmax_loss: non-finite logits for sample " + std::to_string(i));
  }

  out.value = ordered_sum(terms);
  out.grad_features = kernels::matmul_a_bt(dlogits, w);          // M x K
  out.grad_w = kernels::matmul_at_b(batch.features, dlogits);    // K x C
  out.grad_b = kernels::column_sums(dlogits);
  return out;
}

CenterLossResult center_loss(const BatchFeatures& batch, const Matrix& centers) {
  const std::int64_t m = batch.features.rows;
  const std::int64_t k = batch.features.cols;
  const std::int64_t c = centers.rows;
  if (centers.cols != k) throw DimensionError("center_loss: centers cols != feature dim");
  validate_batch(batch, c);

  CenterLossResult out;
  out.grad_features = Matrix(m, k);
  std::vector<double> terms(static_cast<std::size_t>(m), 0.0);
  parallel_for(m, [&](std::int64_t i) {
    const std::int64_t y = batch.labels[static_cast<std::size_t>(i)];
    const double* f = batch.features.data.data() + i * k;
    const double* cy = centers.data.data() + y * k;
    double* g = out.grad_features.data.data() + i * k;
    double s = 0.0;
    for (std::int64_t d = 0; d < k; ++d) {
      g[d] = f[d] - cy[d];
      s += g[d] * g[d];
    }
    terms[static_cast<std::size_t>(i)] = 0.5 * s;
  });
  out.value = ordered_sum(terms);

  out.center_update = Matrix(c, k);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(c), 0);
  for (std::int32_t y : batch.labels) counts[static_cast<std::size_t>(y)]++;
  parallel_for(c, [&](std::int64_t j) {
    if (counts[static_cast<std::size_t>(j)] == 0) return;
    double* row = out.center_update.data.data() + j * k;
    for (std::int64_t i = 0; i < m; ++i) {
      if (batch.labels[static_cast<std::size_t>(i)] != j) continue;
      const double* g = out.grad_features.data.data() + i * k;
      for (std::int64_t d = 0; d < k; ++d) row[d] -= g[d];  // c_j - f_i
    }
    const double scale = 1.0 / (1.0 + static_cast<double>(counts[static_cast<std::size_t>(j)]));
    for (std::int64_t d = 0; d < k; ++d) row[d] *= scale;
  });
  return out;
}

AngularSoftmaxLossResult angular_softmax_loss(const BatchFeatures& batch, const Matrix& w,
                                              int margin) {
  const std::int64_t m = batch.features.rows;
  const std::int64_t k = batch.features.cols;
  const std::int64_t c = w.cols;
  if (w.rows != k) throw DimensionError("angular_softmax_loss: W rows != feature dim");
  if (margin < 1) throw DimensionError("angular_softmax_loss: margin must be >= 1");
  validate_batch(batch, c);

  std::vector<double> w_norms(static_cast<std::size_t>(c), 0.0);
  for (std::int64_t j = 0; j < c; ++j) {
    double s = 0.0;
    for (std::int64_t d = 0; d < k; ++d) s += w(d, j) * w(d, j);
    w_norms[static_cast<std::size_t>(j)] = std::sqrt(s);
    if (w_norms[static_cast<std::size_t>(j)] == 0.0) {
      throw DegenerateInputError("angular_softmax_loss: zero-norm weight column " +
                                 std::to_string(j));
    }
  }

  AngularSoftmaxLossResult out;
  out.grad_features = Matrix(m, k);
  Matrix dlogits(m, c);
  std::vector<double> terms(static_cast<std::size_t>(m), 0.0);
  std::vector<double> target_coef(static_cast<std::size_t>(m), 0.0);   // d z_y / d u chain factor
  std::vector<double> f_norms(static_cast<std::size_t>(m), 0.0);
  std::vector<double> cos_target(static_cast<std::size_t>(m), 0.0);    // clamped cosine at y
  std::vector<std::int64_t> nonmono(static_cast<std::size_t>(m), 0);
  std::vector<char> degenerate(static_cast<std::size_t>(m), 0);

  parallel_for(m, [&](std::int64_t i) {
    const double* f = batch.features.data.data() + i * k;
    double fn = 0.0;
    for (std::int64_t d = 0; d < k; ++d) fn += f[d] * f[d];
    fn = std::sqrt(fn);
    if (fn == 0.0) {
      degenerate[static_cast<std::size_t>(i)] = 1;
      return;
    }
    f_norms[static_cast<std::size_t>(i)] = fn;
    const std::int64_t y = batch.labels[static_cast<std::size_t>(i)];

    double* lrow = dlogits.data.data() + i * c;
    for (std::int64_t j = 0; j < c; ++j) {
      double dotwf = 0.0;
      for (std::int64_t d = 0; d < k; ++d) dotwf += w(d, j) * f[d];
      lrow[j] = dotwf / w_norms[static_cast<std::size_t>(j)];  // ||f|| cos(theta_j)
    }

    // Target logit: ||f|| cos(margin * arccos(u)), u clamped away from +-1
    // so the arccos chain stays differentiable.
    const double u_raw = lrow[y] / fn;
    const double u = std::clamp(u_raw, -1.0 + kCosineClamp, 1.0 - kCosineClamp);
    const double theta = std::acos(u);
    const double mtheta = static_cast<double>(margin) * theta;
    if (mtheta > std::numbers::pi) nonmono[static_cast<std::size_t>(i)] = 1;
    const double sin_theta = std::sin(theta);
    const double chain = static_cast<double>(margin) * std::sin(mtheta) / sin_theta;
    const bool clamped = (u_raw != u);
    cos_target[static_cast<std::size_t>(i)] = u;
    target_coef[static_cast<std::size_t>(i)] = clamped ? 0.0 : chain;
    lrow[y] = fn * std::cos(mtheta);

    double mx = lrow[0];
    for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, lrow[j]);
    const double zy = lrow[y];
    double z = 0.0;
    for (std::int64_t j = 0; j < c; ++j) {
      lrow[j] = std::exp(lrow[j] - mx);
      z += lrow[j];
    }
    terms[static_cast<std::size_t>(i)] = std::log(z) + mx - zy;
    const double inv = 1.0 / z;
    for (std::int64_t j = 0; j < c; ++j) lrow[j] *= inv;
    lrow[y] -= 1.0;
  });
  for (std::size_t i = 0; i < degenerate.size(); ++i) {
    if (degenerate[i]) {
      throw DegenerateInputError("angular_softmax_loss: zero-norm feature " + std::to_string(i));
    }
  }
  out.value = ordered_sum(terms);
  out.nonmonotone_count = std::accumulate(nonmono.begin(), nonmono.end(), std::int64_t{0});

  // d z_j / d f = w_j / ||w_j||                                (j != y)
  // d z_y / d f = cos(m t) f^ + chain * (w^ - u f^)
  parallel_for(m, [&](std::int64_t i) {
    const double* f = batch.features.data.data() + i * k;
    const double* g = dlogits.data.data() + i * c;
    double* gf = out.grad_features.data.data() + i * k;
    const std::int64_t y = batch.labels[static_cast<std::size_t>(i)];
    const double fn = f_norms[static_cast<std::size_t>(i)];
    const double u = cos_target[static_cast<std::size_t>(i)];
    const double chain = target_coef[static_cast<std::size_t>(i)];
    const double theta = std::acos(u);
    const double cos_m = std::cos(static_cast<double>(margin) * theta);
    for (std::int64_t j = 0; j < c; ++j) {
      const double gj = g[j];
      if (gj == 0.0) continue;
      const double inv_wn = 1.0 / w_norms[static_cast<std::size_t>(j)];
      if (j == y) {
        // coefficient of f^ and w^ in d z_y / d f
        const double cf = (cos_m - chain * u) / fn;
        for (std::int64_t d = 0; d < k; ++d) {
          gf[d] += gj * (cf * f[d] + chain * w(d, j) * inv_wn);
        }
      } else {
        for (std::int64_t d = 0; d < k; ++d) gf[d] += gj * w(d, j) * inv_wn;
      }
    }
  });

  // d z_j / d w_j = (f - (f.w^ ) w^) / ||w_j||                 (j != y)
  // d z_y / d w_y = chain * ||f|| (f^ - u w^) / ||w_y||
  out.grad_w = Matrix(k, c);
  parallel_for(c, [&](std::int64_t j) {
    const double wn = w_norms[static_cast<std::size_t>(j)];
    const double inv_wn = 1.0 / wn;
    for (std::int64_t i = 0; i < m; ++i) {
      const double gj = dlogits(i, j);
      if (gj == 0.0) continue;
      const double* f = batch.features.data.data() + i * k;
      const double fn = f_norms[static_cast<std::size_t>(i)];
      const std::int64_t y = batch.labels[static_cast<std::size_t>(i)];
      double dot_fw = 0.0;
      for (std::int64_t d = 0; d < k; ++d) dot_fw += f[d] * w(d, j) * inv_wn;  // f . w^
      if (j == y) {
        const double chain = target_coef[static_cast<std::size_t>(i)];
        const double u = cos_target[static_cast<std::size_t>(i)];
        const double coef = gj * chain * inv_wn;
        for (std::int64_t d = 0; d < k; ++d) {
          out.grad_w(d, j) += coef * (f[d] - u * fn * w(d, j) * inv_wn);
        }
      } else {
        for (std::int64_t d = 0; d < k; ++d) {
          out.grad_w(d, j) += gj * inv_wn * (f[d] - dot_fw * w(d, j) * inv_wn);
        }
      }
    }
  });

  return out;
}

}  // namespace attrloss
