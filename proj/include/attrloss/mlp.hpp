#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attrloss/matrix.hpp"

namespace attrloss {

enum class Activation { relu, tanh, identity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// Fully connected feature mapping R^D -> R^K: affine layers with the given
/// activation on hidden layers; the output layer is affine.
struct MlpSpec {
  std::vector<std::int64_t> layer_dims;  // [D, h1, ..., K]
  Activation activation = Activation::relu;

  std::int64_t input_dim() const { return layer_dims.front(); }
  std::int64_t feature_dim() const { return layer_dims.back(); }
  void validate() const;
};

struct MlpTheta {
  std::vector<Matrix> weights;              // layer l: dims[l] x dims[l+1]
  std::vector<std::vector<double>> biases;  // layer l: dims[l+1]
};

/// Weights uniform in +-1/sqrt(fan_in) drawn layer by layer in row-major
/// order from the given seed; biases zero.
MlpTheta init_mlp(const MlpSpec& spec, std::uint64_t seed);

struct MlpCache {
  std::vector<Matrix> activations;      // a_0 = inputs, then per layer
  std::vector<Matrix> preactivations;   // z_l per layer
};

Matrix mlp_forward(const MlpSpec& spec, const MlpTheta& theta, const Matrix& inputs,
                   MlpCache* cache);

struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

MlpGrads mlp_backward(const MlpSpec& spec, const MlpTheta& theta, const MlpCache& cache,
                      const Matrix& grad_features);

}  // namespace attrloss
