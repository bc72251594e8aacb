#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attrloss/matrix.hpp"
#include "attrloss/mlp.hpp"

namespace attrloss {

/// One training/test item: an input vector, a dense identity label in
/// [0, C), and the identity's attribute vector.
struct Sample {
  std::vector<double> input;
  std::int32_t label = 0;
  std::vector<double> attributes;
};

struct Dataset {
  std::vector<Sample> samples;
  std::int64_t input_dim = 0;   // D
  std::int64_t class_count = 0; // C
  std::int64_t attr_dim = 0;    // H
  std::string name;
  std::string provenance;
};

/// Checks every Dataset invariant; throws FormatError naming the first
/// offending record.
void validate_dataset(const Dataset& ds);

/// All trainable state: backbone parameters, classifier weights and biases,
/// the attribute-to-feature map, and per-class centers.
struct ModelParams {
  MlpTheta theta;
  Matrix classifier_w;          // K x C
  std::vector<double> classifier_b;  // C
  Matrix attr_map;              // G: K x H
  Matrix centers;               // C x K
};

bool params_all_finite(const ModelParams& p);

/// A mini-batch already mapped to feature space.
struct BatchFeatures {
  Matrix features;                 // M x K
  std::vector<std::int32_t> labels;
  Matrix attributes;               // M x H
};

void validate_batch(const BatchFeatures& batch, std::int64_t class_count);

}  // namespace attrloss
