#include "attrloss/types.hpp"

namespace attrloss {

void validate_dataset(const Dataset& ds) {
  if (ds.input_dim <= 0 || ds.class_count <= 0 || ds.attr_dim <= 0) {
    throw FormatError("dataset: dimensions must be positive");
  }
  if (ds.samples.empty()) {
    throw FormatError("dataset: no samples, cannot cover " + std::to_string(ds.class_count) +
                      " classes");
  }
  std::vector<bool> seen(static_cast<std::size_t>(ds.class_count), false);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    const std::string where = "dataset record " + std::to_string(i);
    if (static_cast<std::int64_t>(s.input.size()) != ds.input_dim) {
      throw FormatError(where + ": input length " + std::to_string(s.input.size()) +
                        " != D=" + std::to_string(ds.input_dim));
    }
    if (static_cast<std::int64_t>(s.attributes.size()) != ds.attr_dim) {
      throw FormatError(where + ": attribute length " + std::to_string(s.attributes.size()) +
                        " != H=" + std::to_string(ds.attr_dim));
    }
    if (s.label < 0 || s.label >= ds.class_count) {
      throw FormatError(where + ": label " + std::to_string(s.label) + " outside [0, " +
                        std::to_string(ds.class_count) + ")");
    }
    if (!all_finite(std::span<const double>(s.input)) ||
        !all_finite(std::span<const double>(s.attributes))) {
      throw FormatError(where + ": non-finite payload");
    }
    for (double a : s.attributes) {
      if (a < -1.0 || a > 1.0) throw FormatError(where + ": attribute outside [-1, 1]");
    }
    seen[static_cast<std::size_t>(s.label)] = true;
  }
  for (std::int64_t c = 0; c < ds.class_count; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw FormatError("dataset: label " + std::to_string(c) + " has no samples");
    }
  }
}

bool params_all_finite(const ModelParams& p) {
  for (const Matrix& w : p.theta.weights) {
    if (!all_finite(w)) return false;
  }
  for (const auto& b : p.theta.biases) {
    if (!all_finite(std::span<const double>(b))) return false;
  }
  return all_finite(p.classifier_w) && all_finite(std::span<const double>(p.classifier_b)) &&
         all_finite(p.attr_map) && all_finite(p.centers);
}

void validate_batch(const BatchFeatures& batch, std::int64_t class_count) {
  const std::int64_t m = batch.features.rows;
  if (m < 1) throw DimensionError("batch: must contain at least one sample");
  if (static_cast<std::int64_t>(batch.labels.size()) != m || batch.attributes.rows != m) {
    throw DimensionError("batch: row counts disagree");
  }
  for (std::int32_t y : batch.labels) {
    if (y < 0 || y >= class_count) throw DimensionError("batch: label outside [0, C)");
  }
  if (!all_finite(batch.features)) throw NumericError("batch: non-finite feature");
}

}  // namespace attrloss
