#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "attrloss/attribute_loss.hpp"
#include "attrloss/sgd.hpp"
#include "attrloss/synth.hpp"
#include "attrloss/types.hpp"

namespace attrloss {

struct TrainConfig {
  LossCombo combo = LossCombo::softmax;
  double lambda_attr = 1e-4;
  double lambda_center = 1e-3;
  double alpha_center = 0.5;  // rate of the separate center maintenance rule
  double tau = 0.01;
  std::optional<std::int64_t> pair_cap;
  LrSchedule schedule;
  std::int64_t batch_size = 200;
  std::int64_t total_iterations = 0;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> fine_tune_from;
};

struct TrainRecord {
  std::int64_t iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
  double loss_softmax = 0.0;
  double loss_center = 0.0;
  double loss_attr = 0.0;
  std::int64_t pairs = 0;
};

struct TrainLog {
  std::vector<TrainRecord> records;

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
  std::int64_t iterations_done = 0;
};

/// Raised when a loss or parameter goes non-finite; carries the last
/// parameters that were still finite so callers can checkpoint them.
struct TrainDivergence : NumericError {
  TrainDivergence(std::int64_t it, ModelParams last)
      : NumericError("training diverged at iteration " + std::to_string(it)),
        iteration(it),
        last_good(std::move(last)) {}
  std::int64_t iteration;
  ModelParams last_good;
};

/// Jointly supervised SGD: seeded epoch shuffles without replacement,
/// weighted loss L = L_s + lambda L_a + lambda_c L_c, every parameter
/// stepped by rate/M times its gradient, centers maintained by their own
/// averaged rule. Bitwise deterministic given (dataset, spec, config).
TrainResult train(const Dataset& ds, const MlpSpec& spec, const TrainConfig& cfg);

struct ToyOptions {
  std::uint64_t seed = 0;
  double lambda_attr = 1e-4;
  double tau = 0.01;
  std::int64_t iterations = 1500;
  std::int64_t batch_size = 60;
  std::vector<std::int64_t> hidden_dims = {32};
  Activation activation = Activation::tanh;
  LrSchedule schedule{0.1, {1000, 1300}, 10.0};
};

struct ToyMetrics {
  double mean_span = 0.0;       // mean over identities of mean coordinate extent
  double same_age_dist = 0.0;   // mean centroid distance among same-age identities
  double diff_age_dist = 0.0;
  double ratio = 0.0;           // same_age / diff_age
};

struct ToyResult {
  Dataset dataset;
  TrainResult softmax_run;   // classification loss only
  TrainResult attr_run;      // classification + attribute-aware
  Matrix features_softmax;   // N x 2
  Matrix features_attr;
  ToyMetrics metrics_softmax;
  ToyMetrics metrics_attr;
};

/// Trains the two 2-D toy models on the nine-identity set (both runs share
/// the seed and therefore the batch sequence) and reports the feature
/// spread metrics for each.
ToyResult toy_experiment(const ToyOptions& options);

ToyMetrics toy_metrics(const Matrix& features, const Dataset& ds);

}  // namespace attrloss
