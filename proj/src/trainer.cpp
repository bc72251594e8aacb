#include "attrloss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "attrloss/checkpoint.hpp"
#include "attrloss/rng.hpp"

namespace attrloss {

namespace {

void gather_batch(const Dataset& ds, std::span<const std::int64_t> idx, Matrix& inputs,
                  std::vector<std::int32_t>& labels, Matrix& attrs) {
  const std::int64_t m = static_cast<std::int64_t>(idx.size());
  inputs = Matrix(m, ds.input_dim);
  attrs = Matrix(m, ds.attr_dim);
  labels.resize(static_cast<std::size_t>(m));
  for (std::int64_t r = 0; r < m; ++r) {
    const Sample& s = ds.samples[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])];
    std::copy(s.input.begin(), s.input.end(), inputs.row(r).begin());
    std::copy(s.attributes.begin(), s.attributes.end(), attrs.row(r).begin());
    labels[static_cast<std::size_t>(r)] = s.label;
  }
}

void shuffle_in_place(std::vector<std::int64_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

Matrix initial_centers(const Dataset& ds, const MlpSpec& spec, const MlpTheta& theta) {
  Matrix inputs(static_cast<std::int64_t>(ds.samples.size()), ds.input_dim);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    std::copy(ds.samples[i].input.begin(), ds.samples[i].input.end(),
              inputs.row(static_cast<std::int64_t>(i)).begin());
  }
  const Matrix features = mlp_forward(spec, theta, inputs, nullptr);
  Matrix centers(ds.class_count, spec.feature_dim());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(ds.class_count), 0);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const std::int32_t y = ds.samples[i].label;
    counts[static_cast<std::size_t>(y)]++;
    add_scaled(centers.row(y), features.row(static_cast<std::int64_t>(i)), 1.0);
  }
  for (std::int64_t c = 0; c < centers.rows; ++c) {
    const double inv = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    for (double& x : centers.row(c)) x *= inv;
  }
  return centers;
}

bool grads_finite(const CombinedLossResult& loss) {
  return std::isfinite(loss.value) && all_finite(loss.grad_features) &&
         all_finite(loss.grad_w) && all_finite(std::span<const double>(loss.grad_b)) &&
         all_finite(loss.grad_attr_map);
}

}  // namespace

std::string TrainLog::to_csv() const {
  std::string out = "iter,lr,loss,loss_softmax,loss_center,loss_attr,pairs\n";
  char buf[256];
  for (const TrainRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%lld\n",
                  static_cast<long long>(r.iteration), r.lr, r.loss, r.loss_softmax,
                  r.loss_center, r.loss_attr, static_cast<long long>(r.pairs));
    out += buf;
  }
  return out;
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << to_csv();
}

TrainResult train(const Dataset& ds, const MlpSpec& spec, const TrainConfig& cfg) {
  validate_dataset(ds);
  spec.validate();
  cfg.schedule.validate();
  if (spec.input_dim() != ds.input_dim) throw DimensionError("train: spec D != dataset D");
  if (cfg.batch_size < 1 || cfg.batch_size > static_cast<std::int64_t>(ds.samples.size())) {
    throw ConfigError("train: batch size must lie in [1, N]");
  }
  if (cfg.lambda_attr < 0.0 || cfg.lambda_center < 0.0) {
    throw ConfigError("train: loss weights must be non-negative");
  }

  const std::int64_t n = static_cast<std::int64_t>(ds.samples.size());
  const std::int64_t k = spec.feature_dim();

  TrainResult result;
  if (cfg.fine_tune_from) {
    Checkpoint ckpt = load_checkpoint(*cfg.fine_tune_from);
    if (ckpt.spec.layer_dims != spec.layer_dims || ckpt.class_count != ds.class_count ||
        ckpt.attr_dim != ds.attr_dim) {
      throw DimensionError("train: fine-tune checkpoint does not match spec/dataset");
    }
    result.params = std::move(ckpt.params);
  } else {
    result.params.theta = init_mlp(spec, derive_seed(cfg.seed, "train.init"));
    Rng wrng(derive_seed(cfg.seed, "train.classifier"));
    result.params.classifier_w = Matrix(k, ds.class_count);
    const double bound = 1.0 / std::sqrt(static_cast<double>(k));
    for (double& x : result.params.classifier_w.data) x = wrng.uniform(-bound, bound);
    result.params.classifier_b.assign(static_cast<std::size_t>(ds.class_count), 0.0);
    result.params.attr_map = Matrix(k, ds.attr_dim);  // zero init
    result.params.centers = Matrix(ds.class_count, k);
  }

  const bool center_enabled = combo_has_center(cfg.combo) && cfg.lambda_center != 0.0;
  if (center_enabled) {
    result.params.centers = initial_centers(ds, spec, result.params.theta);
  }

  Rng batch_rng(derive_seed(cfg.seed, "train.batch"));
  const std::uint64_t pair_base = derive_seed(cfg.seed, "train.pairs");

  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::int64_t pos = n;  // forces a shuffle before the first batch

  Matrix inputs;
  Matrix attrs;
  std::vector<std::int32_t> labels;

  for (std::int64_t t = 0; t < cfg.total_iterations; ++t) {
    if (pos >= n) {
      shuffle_in_place(perm, batch_rng);
      pos = 0;
    }
    const std::int64_t take = std::min(cfg.batch_size, n - pos);
    gather_batch(ds, {perm.data() + pos, static_cast<std::size_t>(take)}, inputs, labels, attrs);
    pos += take;

    MlpCache cache;
    BatchFeatures batch;
    batch.features = mlp_forward(spec, result.params.theta, inputs, &cache);
    batch.labels = labels;
    batch.attributes = attrs;

    CombinedLossConfig loss_cfg;
    loss_cfg.combo = cfg.combo;
    loss_cfg.lambda_attr = cfg.lambda_attr;
    loss_cfg.lambda_center = cfg.lambda_center;
    loss_cfg.tau = cfg.tau;
    loss_cfg.pair_cap = cfg.pair_cap;
    loss_cfg.pair_seed = splitmix64(pair_base + static_cast<std::uint64_t>(t));

    CombinedLossResult loss = combined_loss(batch, result.params, loss_cfg);
    if (!grads_finite(loss)) throw TrainDivergence(t, std::move(result.params));

    ParamGrads grads;
    grads.theta = mlp_backward(spec, result.params.theta, cache, loss.grad_features);
    grads.classifier_w = std::move(loss.grad_w);
    grads.classifier_b = std::move(loss.grad_b);
    grads.attr_map = std::move(loss.grad_attr_map);

    ModelParams before_update = result.params;
    sgd_step(result.params, grads, cfg.schedule, t, take);
    if (center_enabled) add_scaled(result.params.centers, loss.center_update, -cfg.alpha_center);
    if (!params_all_finite(result.params)) throw TrainDivergence(t, std::move(before_update));

    TrainRecord rec;
    rec.iteration = t;
    rec.lr = cfg.schedule.rate_at(t);
    rec.loss = loss.value;
    rec.loss_softmax = loss.softmax_value;
    rec.loss_center = loss.center_value;
    rec.loss_attr = loss.attr_value;
    rec.pairs = loss.pair_count;
    result.log.records.push_back(rec);
    result.iterations_done = t + 1;
  }
  return result;
}

ToyMetrics toy_metrics(const Matrix& features, const Dataset& ds) {
  const std::int64_t k = features.cols;
  const std::int64_t c = ds.class_count;

  std::vector<std::vector<double>> mins(static_cast<std::size_t>(c),
                                        std::vector<double>(static_cast<std::size_t>(k), 1e300));
  std::vector<std::vector<double>> maxs(static_cast<std::size_t>(c),
                                        std::vector<double>(static_cast<std::size_t>(k), -1e300));
  std::vector<std::vector<double>> centroid(static_cast<std::size_t>(c),
                                            std::vector<double>(static_cast<std::size_t>(k), 0.0));
  std::vector<std::int64_t> counts(static_cast<std::size_t>(c), 0);
  std::vector<double> age_code(static_cast<std::size_t>(c), 0.0);

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const std::size_t y = static_cast<std::size_t>(ds.samples[i].label);
    counts[y]++;
    age_code[y] = ds.samples[i].attributes.back();
    const auto row = features.row(static_cast<std::int64_t>(i));
    for (std::int64_t d = 0; d < k; ++d) {
      const double v = row[static_cast<std::size_t>(d)];
      mins[y][static_cast<std::size_t>(d)] = std::min(mins[y][static_cast<std::size_t>(d)], v);
      maxs[y][static_cast<std::size_t>(d)] = std::max(maxs[y][static_cast<std::size_t>(d)], v);
      centroid[y][static_cast<std::size_t>(d)] += v;
    }
  }

  ToyMetrics m;
  for (std::int64_t y = 0; y < c; ++y) {
    double span = 0.0;
    for (std::int64_t d = 0; d < k; ++d) {
      span += maxs[static_cast<std::size_t>(y)][static_cast<std::size_t>(d)] -
              mins[static_cast<std::size_t>(y)][static_cast<std::size_t>(d)];
    }
    m.mean_span += span / static_cast<double>(k);
    for (double& x : centroid[static_cast<std::size_t>(y)]) {
      x /= static_cast<double>(counts[static_cast<std::size_t>(y)]);
    }
  }
  m.mean_span /= static_cast<double>(c);

  double same_sum = 0.0, diff_sum = 0.0;
  std::int64_t same_n = 0, diff_n = 0;
  for (std::int64_t a = 0; a < c; ++a) {
    for (std::int64_t b = a + 1; b < c; ++b) {
      const double dist = euclidean_distance(centroid[static_cast<std::size_t>(a)],
                                             centroid[static_cast<std::size_t>(b)]);
      if (age_code[static_cast<std::size_t>(a)] == age_code[static_cast<std::size_t>(b)]) {
        same_sum += dist;
        same_n++;
      } else {
        diff_sum += dist;
        diff_n++;
      }
    }
  }
  m.same_age_dist = same_n > 0 ? same_sum / static_cast<double>(same_n) : 0.0;
  m.diff_age_dist = diff_n > 0 ? diff_sum / static_cast<double>(diff_n) : 0.0;
  m.ratio = m.diff_age_dist > 0.0 ? m.same_age_dist / m.diff_age_dist : 0.0;
  return m;
}

ToyResult toy_experiment(const ToyOptions& options) {
  ToyResult result;
  result.dataset = make_toy_fig2(options.seed);

  MlpSpec spec;
  spec.layer_dims.push_back(result.dataset.input_dim);
  for (std::int64_t hdim : options.hidden_dims) spec.layer_dims.push_back(hdim);
  spec.layer_dims.push_back(2);
  spec.activation = options.activation;

  TrainConfig cfg;
  cfg.combo = LossCombo::softmax;
  cfg.lambda_attr = options.lambda_attr;
  cfg.tau = options.tau;
  cfg.schedule = options.schedule;
  cfg.batch_size = options.batch_size;
  cfg.total_iterations = options.iterations;
  cfg.seed = options.seed;

  result.softmax_run = train(result.dataset, spec, cfg);
  cfg.combo = LossCombo::softmax_attr;
  result.attr_run = train(result.dataset, spec, cfg);

  Matrix inputs(static_cast<std::int64_t>(result.dataset.samples.size()),
                result.dataset.input_dim);
  for (std::size_t i = 0; i < result.dataset.samples.size(); ++i) {
    std::copy(result.dataset.samples[i].input.begin(), result.dataset.samples[i].input.end(),
              inputs.row(static_cast<std::int64_t>(i)).begin());
  }
  result.features_softmax = mlp_forward(spec, result.softmax_run.params.theta, inputs, nullptr);
  result.features_attr = mlp_forward(spec, result.attr_run.params.theta, inputs, nullptr);
  result.metrics_softmax = toy_metrics(result.features_softmax, result.dataset);
  result.metrics_attr = toy_metrics(result.features_attr, result.dataset);
  return result;
}

}  // namespace attrloss
