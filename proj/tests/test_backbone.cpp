#include <doctest.h>

#include <cmath>

#include "attrloss/gradcheck.hpp"
#include "attrloss/mlp.hpp"
#include "attrloss/rng.hpp"
#include "attrloss/sgd.hpp"
#include "attrloss/types.hpp"

using namespace attrloss;

namespace {

Matrix random_matrix(Rng& rng, std::int64_t r, std::int64_t c) {
  Matrix m(r, c);
  for (double& x : m.data) x = rng.gaussian();
  return m;
}

}  // namespace

TEST_CASE("single identity layer passes inputs through") {
  MlpSpec spec;
  spec.layer_dims = {3, 3};
  spec.activation = Activation::identity;
  MlpTheta theta;
  theta.weights.emplace_back(3, 3);
  for (std::int64_t i = 0; i < 3; ++i) theta.weights[0](i, i) = 1.0;
  theta.biases.emplace_back(3, 0.0);

  Rng rng(41);
  const Matrix inputs = random_matrix(rng, 4, 3);
  const Matrix out = mlp_forward(spec, theta, inputs, nullptr);
  CHECK(out.data == inputs.data);
}

TEST_CASE("zero weights broadcast the bias") {
  MlpSpec spec;
  spec.layer_dims = {2, 3};
  spec.activation = Activation::relu;
  MlpTheta theta;
  theta.weights.emplace_back(2, 3);
  theta.biases.push_back({0.5, -1.5, 2.0});

  Rng rng(42);
  const Matrix inputs = random_matrix(rng, 5, 2);
  const Matrix out = mlp_forward(spec, theta, inputs, nullptr);
  for (std::int64_t i = 0; i < 5; ++i) {
    CHECK(out(i, 0) == 0.5);
    CHECK(out(i, 1) == -1.5);
    CHECK(out(i, 2) == 2.0);
  }
}

TEST_CASE("two-layer relu network matches a straight-line reimplementation") {
  MlpSpec spec;
  spec.layer_dims = {4, 5, 3};
  spec.activation = Activation::relu;
  Rng rng(43);
  MlpTheta theta = init_mlp(spec, 99);
  const Matrix inputs = random_matrix(rng, 6, 4);
  const Matrix out = mlp_forward(spec, theta, inputs, nullptr);

  for (std::int64_t i = 0; i < 6; ++i) {
    double hidden[5];
    for (std::int64_t j = 0; j < 5; ++j) {
      double z = theta.biases[0][static_cast<std::size_t>(j)];
      for (std::int64_t d = 0; d < 4; ++d) z += inputs(i, d) * theta.weights[0](d, j);
      hidden[j] = z > 0.0 ? z : 0.0;
    }
    for (std::int64_t j = 0; j < 3; ++j) {
      double z = theta.biases[1][static_cast<std::size_t>(j)];
      for (std::int64_t d = 0; d < 5; ++d) z += hidden[d] * theta.weights[1](d, j);
      CHECK(out(i, j) == doctest::Approx(z).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward zero upstream gives zero gradients; identity layer closed form") {
  MlpSpec spec;
  spec.layer_dims = {3, 3};
  spec.activation = Activation::identity;
  MlpTheta theta;
  theta.weights.emplace_back(3, 3);
  for (std::int64_t i = 0; i < 3; ++i) theta.weights[0](i, i) = 1.0;
  theta.biases.emplace_back(3, 0.0);

  Rng rng(44);
  const Matrix inputs = random_matrix(rng, 4, 3);
  MlpCache cache;
  mlp_forward(spec, theta, inputs, &cache);

  const Matrix zero(4, 3);
  const MlpGrads zero_grads = mlp_backward(spec, theta, cache, zero);
  CHECK(zero_grads.weights[0].data == std::vector<double>(9, 0.0));
  CHECK(zero_grads.biases[0] == std::vector<double>(3, 0.0));

  // grad_W = inputs^T * upstream
  const Matrix upstream = random_matrix(rng, 4, 3);
  const MlpGrads grads = mlp_backward(spec, theta, cache, upstream);
  for (std::int64_t a = 0; a < 3; ++a) {
    for (std::int64_t b = 0; b < 3; ++b) {
      double s = 0.0;
      for (std::int64_t i = 0; i < 4; ++i) s += inputs(i, a) * upstream(i, b);
      CHECK(grads.weights[0](a, b) == doctest::Approx(s).epsilon(1e-13));
    }
  }
}

TEST_CASE("stale cache is rejected") {
  MlpSpec spec;
  spec.layer_dims = {3, 2};
  MlpTheta theta = init_mlp(spec, 1);
  Rng rng(45);
  MlpCache cache;
  mlp_forward(spec, theta, random_matrix(rng, 4, 3), &cache);
  const Matrix wrong_shape(5, 2);
  CHECK_THROWS_AS(mlp_backward(spec, theta, cache, wrong_shape), DimensionError);
}

TEST_CASE("learning-rate schedule pins and monotonicity") {
  LrSchedule sched;
  sched.base_rate = 0.1;
  sched.milestones = {40000, 60000};
  sched.decay = 10.0;
  sched.validate();
  CHECK(sched.rate_at(0) == 0.1);
  CHECK(sched.rate_at(39999) == 0.1);
  CHECK(sched.rate_at(40000) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(sched.rate_at(60000) == doctest::Approx(0.001).epsilon(1e-15));

  for (std::int64_t t = 0; t < 70000; t += 997) {
    CHECK(sched.rate_at(t + 1) <= sched.rate_at(t));
  }

  LrSchedule bad;
  bad.milestones = {10, 10};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sgd step arithmetic") {
  ModelParams params;
  params.theta.weights.emplace_back(1, 1);
  params.theta.weights[0](0, 0) = 1.0;
  params.theta.biases.emplace_back(1, 0.0);
  params.classifier_w = Matrix(1, 1);
  params.classifier_b = {0.0};
  params.attr_map = Matrix(1, 1);
  params.centers = Matrix(1, 1);

  ParamGrads grads;
  grads.theta.weights.emplace_back(1, 1);
  grads.theta.weights[0](0, 0) = 2.0;
  grads.theta.biases.emplace_back(1, 0.0);
  grads.classifier_w = Matrix(1, 1);
  grads.classifier_b = {0.0};
  grads.attr_map = Matrix(1, 1);

  LrSchedule sched;
  sched.base_rate = 0.1;

  // w' = w - (0.1 / 1) * 2 = 0.8
  ModelParams p = params;
  sgd_step(p, grads, sched, 0, 1);
  CHECK(p.theta.weights[0](0, 0) == doctest::Approx(0.8).epsilon(1e-15));

  // zero gradients leave parameters unchanged
  grads.theta.weights[0](0, 0) = 0.0;
  ModelParams q = params;
  sgd_step(q, grads, sched, 0, 1);
  CHECK(q.theta.weights[0](0, 0) == 1.0);
}

TEST_CASE("sgd step is linear in the gradient") {
  // exactly representable values make the split-step bitwise identical
  ModelParams params;
  params.theta.weights.emplace_back(1, 1);
  params.theta.weights[0](0, 0) = 1.0;
  params.theta.biases.emplace_back(1, 0.0);
  params.classifier_w = Matrix(1, 1);
  params.classifier_b = {0.0};
  params.attr_map = Matrix(1, 1);
  params.centers = Matrix(1, 1);

  const auto make_grads = [](double g) {
    ParamGrads grads;
    grads.theta.weights.emplace_back(1, 1);
    grads.theta.weights[0](0, 0) = g;
    grads.theta.biases.emplace_back(1, 0.0);
    grads.classifier_w = Matrix(1, 1);
    grads.classifier_b = {0.0};
    grads.attr_map = Matrix(1, 1);
    return grads;
  };

  LrSchedule sched;
  sched.base_rate = 0.25;

  ModelParams combined = params;
  sgd_step(combined, make_grads(0.5 + 0.25), sched, 3, 2);
  ModelParams split = params;
  sgd_step(split, make_grads(0.5), sched, 3, 2);
  sgd_step(split, make_grads(0.25), sched, 3, 2);
  CHECK(combined.theta.weights[0](0, 0) == split.theta.weights[0](0, 0));
}

TEST_CASE("weight initialization is seeded and bounded by 1/sqrt(fan_in)") {
  MlpSpec spec;
  spec.layer_dims = {16, 8, 4};
  const MlpTheta a = init_mlp(spec, 7);
  const MlpTheta b = init_mlp(spec, 7);
  const MlpTheta c = init_mlp(spec, 8);
  CHECK(a.weights[0].data == b.weights[0].data);
  CHECK(a.weights[0].data != c.weights[0].data);
  const double bound0 = 1.0 / std::sqrt(16.0);
  for (double x : a.weights[0].data) CHECK(std::abs(x) <= bound0);
  for (double x : a.biases[0]) CHECK(x == 0.0);
}

TEST_CASE("finite-difference audit passes and its negative control fails") {
  const GradCheckReport ok = run_gradcheck(2024, 4);
  CHECK(ok.all_pass());
  for (const GradCheckRow& row : ok.rows) CHECK(row.max_rel_err < 1e-5);

  const GradCheckReport corrupted = run_gradcheck(2024, 4, true);
  CHECK(!corrupted.all_pass());
}
