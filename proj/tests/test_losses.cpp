#include <doctest.h>

#include <cmath>

#include "attrloss/losses.hpp"
#include "attrloss/parallel.hpp"
#include "attrloss/rng.hpp"

using namespace attrloss;

namespace {

Matrix random_matrix(Rng& rng, std::int64_t r, std::int64_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.data) x = scale * rng.gaussian();
  return m;
}

BatchFeatures random_batch(Rng& rng, std::int64_t m, std::int64_t k, std::int64_t c) {
  BatchFeatures batch;
  batch.features = random_matrix(rng, m, k);
  batch.attributes = Matrix(m, 3);
  for (double& x : batch.attributes.data) x = rng.uniform(-1, 1);
  batch.labels.resize(static_cast<std::size_t>(m));
  for (auto& y : batch.labels) y = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c)));
  return batch;
}

// Batch with the classifier arranged so the per-sample logits are exactly
// the rows of `logits` (identity features, W = logits^T per sample ... the
// simple route: K = C, feature = one-hot row scaled by the logit values via
// W = identity). Easier: W = I (KxC with K=C), b = 0, f_i = logits row.
BatchFeatures logit_batch(const std::vector<std::vector<double>>& logits,
                          const std::vector<std::int32_t>& labels) {
  BatchFeatures batch;
  const auto m = static_cast<std::int64_t>(logits.size());
  const auto c = static_cast<std::int64_t>(logits[0].size());
  batch.features = Matrix(m, c);
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < c; ++j) batch.features(i, j) = logits[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  batch.labels = labels;
  batch.attributes = Matrix(m, 3);
  return batch;
}

Matrix identity_matrix(std::int64_t n) {
  Matrix m(n, n);
  for (std::int64_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("softmax loss on pinned logit examples") {
  const Matrix w = identity_matrix(2);
  const std::vector<double> b(2, 0.0);

  // uniform logits -> ln 2
  auto batch = logit_batch({{0.0, 0.0}}, {0});
  CHECK(softmax_loss(batch, w, b).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // separated logits -> ln(1 + e^-2)
  batch = logit_batch({{2.0, 0.0}}, {0});
  CHECK(softmax_loss(batch, w, b).value ==
        doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));

  // additivity over samples
  batch = logit_batch({{2.0, 0.0}, {2.0, 0.0}}, {0, 0});
  CHECK(softmax_loss(batch, w, b).value ==
        doctest::Approx(2.0 * std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("softmax loss is translation invariant in the logits") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = static_cast<std::int64_t>(1 + rng.below(6));
    const auto c = static_cast<std::int64_t>(2 + rng.below(4));
    BatchFeatures batch = random_batch(rng, m, c, c);
    const Matrix w = identity_matrix(c);
    std::vector<double> b(static_cast<std::size_t>(c), 0.0);

    const SoftmaxLossResult base = softmax_loss(batch, w, b);
    const double shift = rng.uniform(-5, 5);
    const std::int64_t row = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m)));
    for (std::int64_t j = 0; j < c; ++j) batch.features(row, j) += shift;
    const SoftmaxLossResult shifted = softmax_loss(batch, w, b);

    CHECK(shifted.value == doctest::Approx(base.value).epsilon(1e-12));
    for (std::size_t i = 0; i < base.grad_features.data.size(); ++i) {
      CHECK(shifted.grad_features.data[i] ==
            doctest::Approx(base.grad_features.data[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("softmax loss rejects non-finite logits") {
  BatchFeatures batch = logit_batch({{1e308, 0.0}}, {0});
  batch.features(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(softmax_loss(batch, identity_matrix(2), std::vector<double>(2, 0.0)),
                  NumericError);
}

TEST_CASE("center loss examples and the update direction") {
  Rng rng(22);
  // features equal to their centers -> 0
  BatchFeatures batch = random_batch(rng, 4, 3, 2);
  Matrix centers = random_matrix(rng, 2, 3);
  for (std::int64_t i = 0; i < 4; ++i) {
    const auto c = centers.row(batch.labels[static_cast<std::size_t>(i)]);
    std::copy(c.begin(), c.end(), batch.features.row(i).begin());
  }
  CHECK(center_loss(batch, centers).value == 0.0);

  // unit offset -> 0.5
  batch = logit_batch({{1.0, 0.0}}, {0});
  centers = Matrix(2, 2);
  const CenterLossResult unit = center_loss(batch, centers);
  CHECK(unit.value == 0.5);
  CHECK(unit.grad_features(0, 0) == 1.0);
  // one member of class 0: delta = (c - f) / (1 + 1)
  CHECK(unit.center_update(0, 0) == doctest::Approx(-0.5));
  CHECK(unit.center_update(1, 0) == 0.0);

  // mixed batch matches a brute-force sum of per-sample halves
  batch = random_batch(rng, 6, 3, 2);
  centers = random_matrix(rng, 2, 3);
  double oracle = 0.0;
  for (std::int64_t i = 0; i < 6; ++i) {
    oracle += 0.5 * std::pow(euclidean_distance(batch.features.row(i),
                                                centers.row(batch.labels[static_cast<std::size_t>(i)])),
                             2.0);
  }
  CHECK(center_loss(batch, centers).value == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("center loss value is non-negative and zero only at the centers") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    BatchFeatures batch = random_batch(rng, 5, 3, 3);
    const Matrix centers = random_matrix(rng, 3, 3);
    const double v = center_loss(batch, centers).value;
    CHECK(v >= 0.0);
    if (v == 0.0) {
      for (std::int64_t i = 0; i < 5; ++i) {
        CHECK(euclidean_distance(batch.features.row(i),
                                 centers.row(batch.labels[static_cast<std::size_t>(i)])) == 0.0);
      }
    }
  }
}

TEST_CASE("angular softmax: margin 1 equals softmax on unit columns with zero bias") {
  Rng rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = static_cast<std::int64_t>(1 + rng.below(6));
    const auto k = static_cast<std::int64_t>(3 + rng.below(4));
    const auto c = static_cast<std::int64_t>(2 + rng.below(4));
    const BatchFeatures batch = random_batch(rng, m, k, c);
    Matrix w = random_matrix(rng, k, c);
    for (std::int64_t j = 0; j < c; ++j) {
      double n = 0.0;
      for (std::int64_t d = 0; d < k; ++d) n += w(d, j) * w(d, j);
      n = std::sqrt(n);
      for (std::int64_t d = 0; d < k; ++d) w(d, j) /= n;
    }

    const AngularSoftmaxLossResult ang = angular_softmax_loss(batch, w, 1);
    const SoftmaxLossResult sm = softmax_loss(batch, w, std::vector<double>(static_cast<std::size_t>(c), 0.0));
    CHECK(std::abs(ang.value - sm.value) < 1e-12 * std::max(1.0, std::abs(sm.value)));
    for (std::size_t i = 0; i < sm.grad_features.data.size(); ++i) {
      CHECK(std::abs(ang.grad_features.data[i] - sm.grad_features.data[i]) < 1e-12);
    }
  }
}

TEST_CASE("angular softmax pinned example: orthogonal weight geometry") {
  // ||f|| = 1, theta_y = 0, theta_other = pi/2 -> ln(1 + e^-1)
  BatchFeatures batch;
  batch.features = Matrix(1, 2);
  batch.features(0, 0) = 1.0;
  batch.labels = {0};
  batch.attributes = Matrix(1, 3);
  const Matrix w = identity_matrix(2);
  const double expected = std::log(1.0 + std::exp(-1.0));
  // margin does not matter at theta = 0 (cos(m * 0) = 1), modulo the clamp;
  // the clamped cosine shifts the logit by ~1e-7, within a loose tolerance.
  for (int margin : {1, 2, 3}) {
    CHECK(angular_softmax_loss(batch, w, margin).value ==
          doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("angular softmax value is invariant to positive column rescaling") {
  Rng rng(25);
  const BatchFeatures batch = random_batch(rng, 5, 4, 3);
  Matrix w = random_matrix(rng, 4, 3);
  const double base = angular_softmax_loss(batch, w, 2).value;

  // power-of-two scale: bitwise-identical cosines
  for (std::int64_t d = 0; d < 4; ++d) w(d, 1) *= 2.0;
  CHECK(angular_softmax_loss(batch, w, 2).value == base);

  // arbitrary positive scale: equal within roundoff
  for (std::int64_t d = 0; d < 4; ++d) w(d, 2) *= 2.5;
  CHECK(angular_softmax_loss(batch, w, 2).value == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("angular softmax flags the non-monotone margin region") {
  // Feature opposite its class weight: theta_y = pi, margin 2 puts
  // margin * theta well past pi.
  BatchFeatures batch;
  batch.features = Matrix(1, 2);
  batch.features(0, 0) = -1.0;
  batch.labels = {0};
  batch.attributes = Matrix(1, 3);
  const AngularSoftmaxLossResult res = angular_softmax_loss(batch, identity_matrix(2), 2);
  CHECK(res.nonmonotone_count == 1);
}

TEST_CASE("angular softmax rejects degenerate inputs") {
  BatchFeatures batch;
  batch.features = Matrix(1, 2);  // zero feature
  batch.labels = {0};
  batch.attributes = Matrix(1, 3);
  CHECK_THROWS_AS(angular_softmax_loss(batch, identity_matrix(2), 1), DegenerateInputError);

  batch.features(0, 0) = 1.0;
  Matrix w(2, 2);
  w(0, 0) = 1.0;  // second column zero
  CHECK_THROWS_AS(angular_softmax_loss(batch, w, 1), DegenerateInputError);
}

TEST_CASE("loss evaluation is bitwise identical across worker counts") {
  Rng rng(26);
  const BatchFeatures batch = random_batch(rng, 16, 6, 4);
  const Matrix w = random_matrix(rng, 6, 4);
  const std::vector<double> b(4, 0.1);
  const Matrix centers = random_matrix(rng, 4, 6);

  const int saved = worker_count();
  set_worker_count(1);
  const SoftmaxLossResult sm1 = softmax_loss(batch, w, b);
  const CenterLossResult cl1 = center_loss(batch, centers);
  const AngularSoftmaxLossResult an1 = angular_softmax_loss(batch, w, 2);
  set_worker_count(5);
  const SoftmaxLossResult sm5 = softmax_loss(batch, w, b);
  const CenterLossResult cl5 = center_loss(batch, centers);
  const AngularSoftmaxLossResult an5 = angular_softmax_loss(batch, w, 2);
  set_worker_count(saved);

  CHECK(sm1.value == sm5.value);
  CHECK(sm1.grad_features.data == sm5.grad_features.data);
  CHECK(sm1.grad_w.data == sm5.grad_w.data);
  CHECK(sm1.grad_b == sm5.grad_b);
  CHECK(cl1.value == cl5.value);
  CHECK(cl1.center_update.data == cl5.center_update.data);
  CHECK(an1.value == an5.value);
  CHECK(an1.grad_w.data == an5.grad_w.data);
}
