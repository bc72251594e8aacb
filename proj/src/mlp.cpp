#include "attrloss/mlp.hpp"

#include <cmath>

#include "attrloss/kernels.hpp"
#include "attrloss/parallel.hpp"
#include "attrloss/rng.hpp"

namespace attrloss {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation: " + s);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

void MlpSpec::validate() const {
  if (layer_dims.size() < 2) throw DimensionError("MlpSpec: need at least [D, K]");
  for (std::int64_t d : layer_dims) {
    if (d <= 0) throw DimensionError("MlpSpec: dimensions must be positive");
  }
}

MlpTheta init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MlpTheta theta;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    const std::int64_t fan_in = spec.layer_dims[l];
    const std::int64_t fan_out = spec.layer_dims[l + 1];
    Matrix w(fan_in, fan_out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : w.data) x = rng.uniform(-bound, bound);
    theta.weights.push_back(std::move(w));
    theta.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
  }
  return theta;
}

namespace {

inline double apply_act(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

// Derivative in terms of the preactivation z. relu'(0) is taken as 0.
inline double act_derivative(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

}  // namespace

Matrix mlp_forward(const MlpSpec& spec, const MlpTheta& theta, const Matrix& inputs,
                   MlpCache* cache) {
  spec.validate();
  if (inputs.cols != spec.input_dim()) throw DimensionError("mlp_forward: input dim mismatch");
  const std::size_t layers = theta.weights.size();
  if (layers + 1 != spec.layer_dims.size()) throw DimensionError("mlp_forward: theta/spec mismatch");

  if (cache) {
    cache->activations.clear();
    cache->preactivations.clear();
    cache->activations.push_back(inputs);
  }

  Matrix a = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = kernels::matmul(a, theta.weights[l]);
    const std::vector<double>& b = theta.biases[l];
    parallel_for(z.rows, [&](std::int64_t i) {
      double* row = z.data.data() + i * z.cols;
      for (std::int64_t j = 0; j < z.cols; ++j) row[j] += b[static_cast<std::size_t>(j)];
    });
    if (cache) cache->preactivations.push_back(z);
    const bool hidden = l + 1 < layers;
    if (hidden && spec.activation != Activation::identity) {
      parallel_for(z.rows, [&](std::int64_t i) {
        double* row = z.data.data() + i * z.cols;
        for (std::int64_t j = 0; j < z.cols; ++j) row[j] = apply_act(spec.activation, row[j]);
      });
    }
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

MlpGrads mlp_backward(const MlpSpec& spec, const MlpTheta& theta, const MlpCache& cache,
                      const Matrix& grad_features) {
  const std::size_t layers = theta.weights.size();
  if (cache.activations.size() != layers + 1 || cache.preactivations.size() != layers) {
    throw DimensionError("mlp_backward: cache does not match a forward pass");
  }
  if (grad_features.rows != cache.activations.back().rows ||
      grad_features.cols != cache.activations.back().cols) {
    throw DimensionError("mlp_backward: upstream gradient shape mismatch");
  }

  MlpGrads grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  Matrix delta = grad_features;
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l] = kernels::matmul_at_b(cache.activations[l], delta);
    grads.biases[l] = kernels::column_sums(delta);
    if (l == 0) break;
    Matrix prev = kernels::matmul_a_bt(delta, theta.weights[l]);
    const Matrix& z = cache.preactivations[l - 1];
    parallel_for(prev.rows, [&](std::int64_t i) {
      double* row = prev.data.data() + i * prev.cols;
      const double* zrow = z.data.data() + i * z.cols;
      for (std::int64_t j = 0; j < prev.cols; ++j) {
        row[j] *= act_derivative(spec.activation, zrow[j]);
      }
    });
    delta = std::move(prev);
  }
  return grads;
}

}  // namespace attrloss
