#include <doctest.h>

#include <cmath>
#include <set>

#include "attrloss/attribute_loss.hpp"
#include "attrloss/attributes.hpp"
#include "attrloss/rng.hpp"

using namespace attrloss;

namespace {

Matrix random_matrix(Rng& rng, std::int64_t r, std::int64_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.data) x = scale * rng.gaussian();
  return m;
}

BatchFeatures make_batch(const std::vector<std::vector<double>>& features,
                         const std::vector<std::int32_t>& labels,
                         const std::vector<std::vector<double>>& attrs) {
  BatchFeatures batch;
  const auto m = static_cast<std::int64_t>(features.size());
  const auto k = static_cast<std::int64_t>(features[0].size());
  const auto h = static_cast<std::int64_t>(attrs[0].size());
  batch.features = Matrix(m, k);
  batch.attributes = Matrix(m, h);
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t d = 0; d < k; ++d) batch.features(i, d) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
    for (std::int64_t a = 0; a < h; ++a) batch.attributes(i, a) = attrs[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
  }
  batch.labels = labels;
  return batch;
}

BatchFeatures random_batch(Rng& rng, std::int64_t m, std::int64_t k, std::int64_t c,
                           std::int64_t h) {
  BatchFeatures batch;
  batch.features = random_matrix(rng, m, k);
  batch.attributes = Matrix(m, h);
  for (double& x : batch.attributes.data) x = rng.uniform(-0.5, 0.5);
  batch.labels.resize(static_cast<std::size_t>(m));
  for (auto& y : batch.labels) y = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c)));
  return batch;
}

}  // namespace

TEST_CASE("pair selection enumerates exactly the qualifying pairs") {
  const BatchFeatures batch = make_batch({{0.0}, {0.0}, {0.0}}, {1, 2, 2},
                                         {{0, 0, 0}, {0, 0, 0.005}, {0, 0, 0.5}});
  const PairSelection sel = select_pairs(batch, 0.01, std::nullopt, 0);
  REQUIRE(sel.pairs.size() == 1);
  CHECK(sel.pairs[0] == std::make_pair(std::int32_t{0}, std::int32_t{1}));
}

TEST_CASE("pair selection is empty when every label matches") {
  const BatchFeatures batch =
      make_batch({{0.0}, {0.0}, {0.0}}, {3, 3, 3}, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  CHECK(select_pairs(batch, 1.0, std::nullopt, 0).pairs.empty());
}

TEST_CASE("capped selection is a reproducible uniform subset") {
  Rng rng(31);
  // 10 samples alternating labels, all attributes identical: 25 cross pairs
  BatchFeatures batch = random_batch(rng, 10, 2, 2, 3);
  for (std::size_t i = 0; i < 10; ++i) batch.labels[i] = static_cast<std::int32_t>(i % 2);
  for (double& x : batch.attributes.data) x = 0.0;

  const PairSelection full = select_pairs(batch, 0.5, std::nullopt, 99);
  CHECK(full.pairs.size() == 25);

  const PairSelection capped = select_pairs(batch, 0.5, 10, 4242);
  CHECK(capped.pairs.size() == 10);
  const PairSelection again = select_pairs(batch, 0.5, 10, 4242);
  CHECK(capped.pairs == again.pairs);
  // capped is a subset of the full enumeration, in canonical order
  std::set<std::pair<std::int32_t, std::int32_t>> universe(full.pairs.begin(), full.pairs.end());
  for (const auto& p : capped.pairs) {
    CHECK(universe.count(p) == 1);
    CHECK(p.first < p.second);
  }
  const PairSelection other_seed = select_pairs(batch, 0.5, 10, 4243);
  CHECK(other_seed.pairs != capped.pairs);  // different subset, same size
  CHECK(other_seed.pairs.size() == 10);
}

TEST_CASE("pair selection is monotone in tau before capping") {
  Rng rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const BatchFeatures batch = random_batch(rng, 12, 2, 3, 3);
    const double tau_small = 0.2 + 0.2 * rng.next_double();
    const double tau_big = tau_small + 0.5 * rng.next_double();
    const PairSelection small = select_pairs(batch, tau_small, std::nullopt, 0);
    const PairSelection big = select_pairs(batch, tau_big, std::nullopt, 0);
    std::set<std::pair<std::int32_t, std::int32_t>> big_set(big.pairs.begin(), big.pairs.end());
    for (const auto& p : small.pairs) CHECK(big_set.count(p) == 1);
  }
}

TEST_CASE("attribute loss forward on pinned examples") {
  // empty selection
  const BatchFeatures batch = make_batch({{1, 0}, {0, 0}}, {0, 1}, {{0, 0}, {0, 0}});
  PairSelection empty;
  empty.tau = 0.01;
  Matrix g(2, 2);
  CHECK(attribute_loss_forward(batch, empty, g) == 0.0);

  // one pair, residual is a unit vector (G = 0)
  const PairSelection sel = select_pairs(batch, 0.5, std::nullopt, 0);
  REQUIRE(sel.pairs.size() == 1);
  CHECK(attribute_loss_forward(batch, sel, g) == 0.5);

  // exact linear fit: f_i - f_j = p_i - p_j, G = I
  const BatchFeatures fit = make_batch({{0.3, -0.2}, {0.1, 0.1}}, {0, 1},
                                       {{0.3, -0.2}, {0.1, 0.1}});
  Matrix identity(2, 2);
  identity(0, 0) = identity(1, 1) = 1.0;
  const PairSelection fit_sel = select_pairs(fit, 1.0, std::nullopt, 0);
  REQUIRE(fit_sel.pairs.size() == 1);
  CHECK(attribute_loss_forward(fit, fit_sel, identity) == 0.0);
}

TEST_CASE("attribute loss forward matches a naive double-loop oracle") {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const BatchFeatures batch = random_batch(rng, 8, 3, 3, 2);
    const Matrix g = random_matrix(rng, 3, 2);
    const double tau = 0.8;
    const PairSelection sel = select_pairs(batch, tau, std::nullopt, 0);

    double oracle = 0.0;
    for (std::int64_t i = 0; i < 8; ++i) {
      for (std::int64_t j = i + 1; j < 8; ++j) {
        if (batch.labels[static_cast<std::size_t>(i)] == batch.labels[static_cast<std::size_t>(j)]) continue;
        if (attribute_distance(batch.attributes.row(i), batch.attributes.row(j)) >= tau) continue;
        double s = 0.0;
        for (std::int64_t d = 0; d < 3; ++d) {
          double gp = 0.0;
          for (std::int64_t a = 0; a < 2; ++a) {
            gp += g(d, a) * (batch.attributes(i, a) - batch.attributes(j, a));
          }
          const double r = (batch.features(i, d) - batch.features(j, d)) - gp;
          s += r * r;
        }
        oracle += 0.5 * s;
      }
    }
    CHECK(attribute_loss_forward(batch, sel, g) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("attribute loss forward is symmetric under pair orientation") {
  Rng rng(34);
  BatchFeatures batch = random_batch(rng, 2, 3, 2, 2);
  batch.labels = {0, 1};
  const Matrix g = random_matrix(rng, 3, 2);
  const PairSelection sel = select_pairs(batch, 10.0, std::nullopt, 0);
  const double value = attribute_loss_forward(batch, sel, g);

  // swap the two rows; the canonical pair is the same but both differences
  // flip sign
  BatchFeatures swapped = batch;
  for (std::int64_t d = 0; d < 3; ++d) std::swap(swapped.features(0, d), swapped.features(1, d));
  for (std::int64_t a = 0; a < 2; ++a) std::swap(swapped.attributes(0, a), swapped.attributes(1, a));
  std::swap(swapped.labels[0], swapped.labels[1]);
  CHECK(attribute_loss_forward(swapped, sel, g) == doctest::Approx(value).epsilon(1e-12));
}

TEST_CASE("attribute loss backward: pinned cases") {
  const BatchFeatures batch = make_batch({{1, 0}, {0, 0}}, {0, 1}, {{0.2, 0}, {0, 0}});
  Matrix g(2, 2);

  PairSelection empty;
  empty.tau = 1.0;
  const AttributeLossGrads zero = attribute_loss_backward(batch, empty, g);
  CHECK(zero.grad_features.data == std::vector<double>{0, 0, 0, 0});
  CHECK(zero.grad_attr_map.data == std::vector<double>{0, 0, 0, 0});

  // single pair with G = 0: dL/dG = -(f_i - f_j)(p_i - p_j)^T
  const PairSelection sel = select_pairs(batch, 1.0, std::nullopt, 0);
  const AttributeLossGrads grads = attribute_loss_backward(batch, sel, g);
  CHECK(grads.grad_attr_map(0, 0) == doctest::Approx(-1.0 * 0.2));
  CHECK(grads.grad_attr_map(0, 1) == 0.0);
  CHECK(grads.grad_attr_map(1, 0) == 0.0);
  CHECK(grads.grad_attr_map(1, 1) == 0.0);
  // dL/df_i = r, dL/df_j = -r with r = (f_i - f_j) - G dp = (1, 0)
  CHECK(grads.grad_features(0, 0) == 1.0);
  CHECK(grads.grad_features(1, 0) == -1.0);
}

TEST_CASE("least-squares G attains a value no worse than gradient iterates") {
  Rng rng(35);
  const BatchFeatures batch = random_batch(rng, 10, 3, 4, 2);
  const double tau = 1.0;
  const PairSelection sel = select_pairs(batch, tau, std::nullopt, 0);
  REQUIRE(sel.pairs.size() >= 3);

  // Normal equations G * (sum dp dp^T) = sum df dp^T, solved by Gaussian
  // elimination on the tiny H x H system.
  Matrix ata(2, 2);
  Matrix bt(3, 2);  // sum df dp^T
  for (const auto& [i, j] : sel.pairs) {
    double dp[2];
    for (std::int64_t a = 0; a < 2; ++a) dp[a] = batch.attributes(i, a) - batch.attributes(j, a);
    for (std::int64_t a = 0; a < 2; ++a) {
      for (std::int64_t b = 0; b < 2; ++b) ata(a, b) += dp[a] * dp[b];
    }
    for (std::int64_t d = 0; d < 3; ++d) {
      const double df = batch.features(i, d) - batch.features(j, d);
      for (std::int64_t a = 0; a < 2; ++a) bt(d, a) += df * dp[a];
    }
  }
  // solve ata^T x = rhs for each feature row (ata symmetric)
  Matrix g_star(3, 2);
  const double det = ata(0, 0) * ata(1, 1) - ata(0, 1) * ata(1, 0);
  REQUIRE(std::abs(det) > 1e-9);
  for (std::int64_t d = 0; d < 3; ++d) {
    g_star(d, 0) = (bt(d, 0) * ata(1, 1) - bt(d, 1) * ata(0, 1)) / det;
    g_star(d, 1) = (ata(0, 0) * bt(d, 1) - ata(1, 0) * bt(d, 0)) / det;
  }
  const double best = attribute_loss_forward(batch, sel, g_star);

  Matrix g = random_matrix(rng, 3, 2);
  for (int step = 0; step < 50; ++step) {
    CHECK(best <= attribute_loss_forward(batch, sel, g) + 1e-12);
    const AttributeLossGrads grads = attribute_loss_backward(batch, sel, g);
    add_scaled(g, grads.grad_attr_map, -0.05);
  }
}

TEST_CASE("combined loss degenerate and oracle cases") {
  Rng rng(36);
  const std::int64_t m = 8, k = 4, c = 3, h = 3;
  BatchFeatures batch = random_batch(rng, m, k, c, h);

  ModelParams params;
  params.classifier_w = random_matrix(rng, k, c);
  params.classifier_b.assign(static_cast<std::size_t>(c), 0.05);
  params.attr_map = random_matrix(rng, k, h, 0.3);
  params.centers = random_matrix(rng, c, k);

  CombinedLossConfig cfg;
  cfg.tau = 0.8;
  cfg.pair_seed = 7;

  // lambda = 0 reduces to the softmax loss bitwise
  cfg.combo = LossCombo::softmax_attr;
  cfg.lambda_attr = 0.0;
  const CombinedLossResult no_attr = combined_loss(batch, params, cfg);
  const SoftmaxLossResult sm = softmax_loss(batch, params.classifier_w, params.classifier_b);
  CHECK(no_attr.value == sm.value);
  CHECK(no_attr.grad_features.data == sm.grad_features.data);
  CHECK(no_attr.pair_count == 0);

  // combo (b) with an empty selection equals softmax; grad_G stays zero
  cfg.lambda_attr = 0.1;
  cfg.tau = 1e-12;
  const CombinedLossResult empty_sel = combined_loss(batch, params, cfg);
  CHECK(empty_sel.value == sm.value);
  CHECK(empty_sel.grad_attr_map.data == std::vector<double>(static_cast<std::size_t>(k * h), 0.0));

  // combo (d) equals the weighted sum of the three constituents
  cfg.combo = LossCombo::softmax_center_attr;
  cfg.tau = 0.8;
  cfg.lambda_attr = 0.3;
  cfg.lambda_center = 0.11;
  const CombinedLossResult full = combined_loss(batch, params, cfg);
  const PairSelection sel = select_pairs(batch, cfg.tau, std::nullopt, cfg.pair_seed);
  const double attr = attribute_loss_forward(batch, sel, params.attr_map);
  const double center = center_loss(batch, params.centers).value;
  CHECK(full.value ==
        doctest::Approx(sm.value + 0.3 * attr + 0.11 * center).epsilon(1e-12));
  CHECK(full.attr_value == doctest::Approx(attr).epsilon(1e-14));
  CHECK(full.center_value == doctest::Approx(center).epsilon(1e-14));
}
