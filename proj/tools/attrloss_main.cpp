// Command-line front end: reproducible synthetic datasets, training,
// evaluation, bound checking, gradient checking, and RGB-D preprocessing.
// Exit codes: 0 success, 1 config error, 2 numeric abort, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "attrloss/attribute_loss.hpp"
#include "attrloss/attributes.hpp"
#include "attrloss/checkpoint.hpp"
#include "attrloss/config.hpp"
#include "attrloss/dataset_io.hpp"
#include "attrloss/eval.hpp"
#include "attrloss/gradcheck.hpp"
#include "attrloss/rgbd.hpp"
#include "attrloss/rng.hpp"
#include "attrloss/synth.hpp"
#include "attrloss/trainer.hpp"

namespace fs = std::filesystem;
using namespace attrloss;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;

LossCombo combo_from_letter(const std::string& s) {
  if (s == "a") return LossCombo::softmax;
  if (s == "b") return LossCombo::softmax_attr;
  if (s == "c") return LossCombo::softmax_center;
  if (s == "d") return LossCombo::softmax_center_attr;
  throw ConfigError("combo must be one of a, b, c, d (got '" + s + "')");
}

std::string combo_letter(LossCombo combo) {
  switch (combo) {
    case LossCombo::softmax: return "a";
    case LossCombo::softmax_attr: return "b";
    case LossCombo::softmax_center: return "c";
    case LossCombo::softmax_center_attr: return "d";
  }
  return "?";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string int_list_string(const std::vector<std::int64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += " ";
    out += std::to_string(v[i]);
  }
  return out;
}

// Applies a config value to `target` unless the matching flag was given on
// the command line; flags always win.
template <typename T>
void fill_from_config(const CLI::App& cmd, const std::string& flag, const ConfigFile& cfg,
                      const std::string& key, T& target) {
  const CLI::Option* opt = cmd.get_option(flag);
  if (opt->count() > 0) return;
  if (!cfg.has(key)) return;
  if constexpr (std::is_same_v<T, double>) {
    target = cfg.get_double(key, target);
  } else if constexpr (std::is_same_v<T, std::int64_t>) {
    target = cfg.get_int(key, target);
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    target = static_cast<std::uint64_t>(cfg.get_int(key, static_cast<std::int64_t>(target)));
  } else if constexpr (std::is_same_v<T, std::string>) {
    target = cfg.get_string(key, target);
  } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
    target = cfg.get_int_list(key, target);
  }
}

const std::set<std::string> kKnownConfigKeys = {
    "seed", "out",
    "synth.preset", "synth.scale", "synth.samples_per_identity", "synth.d",
    "synth.attr_signal", "synth.identity_noise", "synth.observation_noise", "synth.nuisance",
    "synth.name",
    "mlp.hidden", "mlp.activation", "mlp.feature_dim",
    "train.dataset", "train.combo", "train.lambda", "train.lambda_center", "train.alpha_center",
    "train.tau", "train.pair_cap", "train.lr", "train.milestones", "train.decay",
    "train.batch_size", "train.iterations", "train.fine_tune_from",
    "eval.dataset", "eval.checkpoint",
    "check.dataset", "check.checkpoint", "check.tau",
    "preprocess.depth", "preprocess.rgb", "preprocess.radius", "preprocess.label",
    "preprocess.gender", "preprocess.ethnicity", "preprocess.age",
    "toy.lambda", "toy.tau", "toy.iterations", "toy.batch_size",
};

fs::path resolve_preset(const std::string& name) {
  if (fs::exists(name)) return name;
  if (const char* dir = std::getenv("ATTRLOSS_PRESET_DIR")) {
    const fs::path p = fs::path(dir) / (name + ".preset");
    if (fs::exists(p)) return p;
  }
  const fs::path local = fs::path("presets") / (name + ".preset");
  if (fs::exists(local)) return local;
  throw ConfigError("preset not found: " + name);
}

struct SynthArgs {
  std::string preset = "fig2";
  double scale = 0.0;  // 0 keeps the preset file's scale
  std::int64_t samples_per_identity = 0;
  std::int64_t input_dim = 0;
  double attr_signal = -1.0;
  double identity_noise = -1.0;
  double observation_noise = -1.0;
  double nuisance = -1.0;
  std::string name;
};

int run_synth(const SynthArgs& args, std::uint64_t seed, const fs::path& out) {
  SynthSpec spec = args.preset == "fig2" ? toy_fig2_spec(seed)
                                         : load_preset(resolve_preset(args.preset), args.scale, seed);
  if (args.samples_per_identity > 0) spec.samples_per_identity = args.samples_per_identity;
  if (args.input_dim > 0) spec.input_dim = args.input_dim;
  if (args.attr_signal >= 0.0) spec.attr_signal = args.attr_signal;
  if (args.identity_noise >= 0.0) spec.identity_noise = args.identity_noise;
  if (args.observation_noise >= 0.0) spec.observation_noise = args.observation_noise;
  if (args.nuisance >= 0.0) spec.nuisance = args.nuisance;
  if (!args.name.empty()) spec.name = args.name;

  const Dataset ds = generate(spec);
  save_dataset(ds, out);

  std::printf("wrote %s: N=%zu D=%lld C=%lld H=%lld\n", out.string().c_str(), ds.samples.size(),
              static_cast<long long>(ds.input_dim), static_cast<long long>(ds.class_count),
              static_cast<long long>(ds.attr_dim));
  std::printf("%-8s %-10s %-14s %s\n", "gender", "ethnicity", "ages", "identities");
  for (const SynthGroup& g : spec.groups) {
    std::printf("%-8s %-10s (%.0f, %.0f]     %lld\n",
                g.gender == Gender::male ? "male" : "female",
                g.ethnicity == Ethnicity::asian ? "asian" : "caucasian", g.age_lo, g.age_hi,
                static_cast<long long>(g.identity_count));
  }

  std::string snap;
  snap += "seed = " + std::to_string(seed) + "\n";
  snap += "out = " + out.string() + "\n[synth]\n";
  snap += "preset = " + args.preset + "\n";
  if (args.scale > 0) snap += "scale = " + format_double(args.scale) + "\n";
  snap += "samples_per_identity = " + std::to_string(spec.samples_per_identity) + "\n";
  snap += "d = " + std::to_string(spec.input_dim) + "\n";
  snap += "attr_signal = " + format_double(spec.attr_signal) + "\n";
  snap += "identity_noise = " + format_double(spec.identity_noise) + "\n";
  snap += "observation_noise = " + format_double(spec.observation_noise) + "\n";
  snap += "nuisance = " + format_double(spec.nuisance) + "\n";
  snap += "name = " + spec.name + "\n";
  write_text(out.string() + ".cfg", snap);
  return kExitOk;
}

struct TrainArgs {
  std::string dataset;
  std::string combo = "a";
  double lambda_attr = 1e-4;
  double lambda_center = 1e-3;
  double alpha_center = 0.5;
  double tau = 0.01;
  std::int64_t pair_cap = 0;  // 0 = unbounded
  double lr = -1.0;           // default depends on fine-tuning
  std::vector<std::int64_t> milestones;
  double decay = 10.0;
  std::int64_t batch_size = 64;
  std::int64_t iterations = 1000;
  std::vector<std::int64_t> hidden = {32};
  std::string activation = "relu";
  std::string fine_tune_from;
};

MlpSpec build_spec(const Dataset& ds, const std::vector<std::int64_t>& hidden,
                   const std::string& activation, std::int64_t feature_dim) {
  MlpSpec spec;
  spec.layer_dims.push_back(ds.input_dim);
  for (std::int64_t hdim : hidden) spec.layer_dims.push_back(hdim);
  spec.layer_dims.push_back(feature_dim);
  spec.activation = activation_from_string(activation);
  return spec;
}

std::string train_snapshot(const TrainArgs& args, const TrainConfig& cfg,
                           const std::vector<std::int64_t>& hidden, std::int64_t feature_dim) {
  std::string snap;
  snap += "seed = " + std::to_string(cfg.seed) + "\n";
  snap += "[mlp]\nhidden = " + int_list_string(hidden) + "\n";
  snap += "activation = " + args.activation + "\n";
  snap += "feature_dim = " + std::to_string(feature_dim) + "\n";
  snap += "[train]\ndataset = " + args.dataset + "\n";
  snap += "combo = " + combo_letter(cfg.combo) + "\n";
  snap += "lambda = " + format_double(cfg.lambda_attr) + "\n";
  snap += "lambda_center = " + format_double(cfg.lambda_center) + "\n";
  snap += "alpha_center = " + format_double(cfg.alpha_center) + "\n";
  snap += "tau = " + format_double(cfg.tau) + "\n";
  snap += "pair_cap = " + std::to_string(cfg.pair_cap ? *cfg.pair_cap : 0) + "\n";
  snap += "lr = " + format_double(cfg.schedule.base_rate) + "\n";
  snap += "milestones = " + int_list_string(cfg.schedule.milestones) + "\n";
  snap += "decay = " + format_double(cfg.schedule.decay) + "\n";
  snap += "batch_size = " + std::to_string(cfg.batch_size) + "\n";
  snap += "iterations = " + std::to_string(cfg.total_iterations) + "\n";
  if (cfg.fine_tune_from) snap += "fine_tune_from = " + cfg.fine_tune_from->string() + "\n";
  return snap;
}

int run_train(const TrainArgs& args, std::uint64_t seed, const fs::path& out_dir,
              std::int64_t feature_dim) {
  const Dataset ds = load_dataset(args.dataset);

  TrainConfig cfg;
  cfg.combo = combo_from_letter(args.combo);
  cfg.lambda_attr = args.lambda_attr;
  cfg.lambda_center = args.lambda_center;
  cfg.alpha_center = args.alpha_center;
  cfg.tau = args.tau;
  if (args.pair_cap > 0) cfg.pair_cap = args.pair_cap;
  // Fine-tuning restarts the schedule from a tenth of the usual base rate
  // unless the rate is given explicitly.
  cfg.schedule.base_rate = args.lr > 0 ? args.lr : (args.fine_tune_from.empty() ? 0.1 : 0.01);
  cfg.schedule.milestones = args.milestones;
  cfg.schedule.decay = args.decay;
  cfg.batch_size = args.batch_size;
  cfg.total_iterations = args.iterations;
  cfg.seed = seed;
  if (!args.fine_tune_from.empty()) cfg.fine_tune_from = fs::path(args.fine_tune_from);

  const MlpSpec spec = build_spec(ds, args.hidden, args.activation, feature_dim);
  fs::create_directories(out_dir);

  Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.class_count = ds.class_count;
  ckpt.attr_dim = ds.attr_dim;
  try {
    TrainResult result = train(ds, spec, cfg);
    ckpt.params = std::move(result.params);
    ckpt.iteration = result.iterations_done;
    save_checkpoint(ckpt, out_dir / "checkpoint.attrckp");
    result.log.write_csv(out_dir / "train_log.csv");
    write_text(out_dir / "resolved.cfg", train_snapshot(args, cfg, args.hidden, feature_dim));
    if (!result.log.records.empty()) {
      std::printf("trained %lld iterations, final loss %.6g\n",
                  static_cast<long long>(result.iterations_done),
                  result.log.records.back().loss);
    } else {
      std::printf("trained 0 iterations (initial parameters saved)\n");
    }
  } catch (const TrainDivergence& e) {
    ckpt.params = e.last_good;
    ckpt.iteration = e.iteration;
    save_checkpoint(ckpt, out_dir / "last_good.attrckp");
    std::fprintf(stderr, "error: %s (last good parameters in %s)\n", e.what(),
                 (out_dir / "last_good.attrckp").string().c_str());
    return kExitNumeric;
  }
  return kExitOk;
}

Matrix dataset_features(const Checkpoint& ckpt, const Dataset& ds) {
  if (ckpt.spec.input_dim() != ds.input_dim || ckpt.class_count != ds.class_count ||
      ckpt.attr_dim != ds.attr_dim) {
    throw ConfigError("checkpoint dimensions do not match the dataset");
  }
  Matrix inputs(static_cast<std::int64_t>(ds.samples.size()), ds.input_dim);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    std::copy(ds.samples[i].input.begin(), ds.samples[i].input.end(),
              inputs.row(static_cast<std::int64_t>(i)).begin());
  }
  return mlp_forward(ckpt.spec, ckpt.params.theta, inputs, nullptr);
}

int run_eval(const std::vector<std::string>& checkpoints, const std::string& dataset,
             const fs::path& out_dir) {
  const Dataset ds = load_dataset(dataset);
  fs::create_directories(out_dir);

  std::vector<std::int32_t> labels;
  for (const Sample& s : ds.samples) labels.push_back(s.label);

  std::string report;
  std::printf("%-40s %-8s %-8s %-10s %s\n", "checkpoint", "rank1", "rank5", "verif", "threshold");
  for (const std::string& ckpt_path : checkpoints) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const Matrix features = dataset_features(ckpt, ds);
    const GallerySplit split = make_gallery_split(features, labels);

    const std::vector<double> cmc = cmc_curve(split);
    const double rank1 = cmc.front();
    const double rank5 = cmc[std::min<std::size_t>(4, cmc.size() - 1)];

    std::vector<VerificationPair> pairs;
    for (std::int64_t p = 0; p < split.probe_features.rows; ++p) {
      for (std::int64_t g = 0; g < split.gallery_features.rows; ++g) {
        VerificationPair vp;
        const auto pr = split.probe_features.row(p);
        const auto gr = split.gallery_features.row(g);
        vp.f1.assign(pr.begin(), pr.end());
        vp.f2.assign(gr.begin(), gr.end());
        vp.same = split.probe_labels[static_cast<std::size_t>(p)] ==
                  split.gallery_labels[static_cast<std::size_t>(g)];
        pairs.push_back(std::move(vp));
      }
    }
    const VerificationResult verif = verification_accuracy(pairs);

    const std::string stem = fs::path(ckpt_path).stem().string();
    std::string cmc_csv = "k,rate\n";
    for (std::size_t k = 0; k < cmc.size(); ++k) {
      cmc_csv += std::to_string(k + 1) + "," + format_double(cmc[k]) + "\n";
    }
    write_text(out_dir / ("cmc_" + stem + ".csv"), cmc_csv);

    char line[256];
    std::snprintf(line, sizeof(line), "%-40s %-8.4f %-8.4f %-10.4f %.6f\n", ckpt_path.c_str(),
                  rank1, rank5, verif.accuracy, verif.threshold);
    std::fputs(line, stdout);
    report += line;
  }
  write_text(out_dir / "report.txt", report);

  std::string snap = "[eval]\ndataset = " + dataset + "\n";
  for (const std::string& c : checkpoints) snap += "checkpoint = " + c + "\n";
  write_text(out_dir / "resolved.cfg", snap);
  return kExitOk;
}

int run_check(const std::string& checkpoint, const std::string& dataset, double tau,
              const fs::path& out_dir) {
  const Dataset ds = load_dataset(dataset);
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Matrix features = dataset_features(ckpt, ds);

  std::vector<std::int32_t> labels;
  Matrix attrs(static_cast<std::int64_t>(ds.samples.size()), ds.attr_dim);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    labels.push_back(ds.samples[i].label);
    std::copy(ds.samples[i].attributes.begin(), ds.samples[i].attributes.end(),
              attrs.row(static_cast<std::int64_t>(i)).begin());
  }

  const Prop1Report report = verify_prop1(features, labels, attrs, ckpt.params.attr_map, tau);
  fs::create_directories(out_dir);
  write_text(out_dir / "prop1.txt", report.summary());
  write_text(out_dir / "prop1.csv", report.to_csv());
  std::string snap = "[check]\ndataset = " + dataset + "\ncheckpoint = " + checkpoint +
                     "\ntau = " + format_double(tau) + "\n";
  write_text(out_dir / "resolved.cfg", snap);

  std::fputs(report.summary().c_str(), stdout);
  if (report.violation_count > 0) {
    std::fprintf(stderr, "error: %lld bound violations (this indicates an implementation bug)\n",
                 static_cast<long long>(report.violation_count));
    return kExitNumeric;
  }
  return kExitOk;
}

int run_preprocess(const std::string& depth_path, const std::string& rgb_path,
                   const std::vector<double>& nose_tip, double radius, std::int64_t label,
                   const std::string& gender, const std::string& ethnicity, double age,
                   const fs::path& out) {
  const DepthImage depth = load_depth_raster(depth_path);
  const std::vector<std::uint8_t> rgb = load_rgb_raster(rgb_path);

  const PointCloud cloud = unproject(depth);
  const PointCloud cropped =
      crop_sphere(cloud, {nose_tip[0], nose_tip[1], nose_tip[2]}, radius);
  const ProjectionResult projected =
      recenter_and_project(cropped, depth.intrinsics, radius);
  const NormalizedFaceTensor tensor = normalize_tensor(rgb, projected.depth);

  Gender g;
  if (gender == "male") g = Gender::male;
  else if (gender == "female") g = Gender::female;
  else throw ConfigError("gender must be male or female");
  Ethnicity e;
  if (ethnicity == "asian") e = Ethnicity::asian;
  else if (ethnicity == "caucasian") e = Ethnicity::caucasian;
  else throw ConfigError("ethnicity must be asian or caucasian");

  Sample sample;
  sample.input = tensor.flatten();
  sample.label = static_cast<std::int32_t>(label);
  sample.attributes = encode_attributes(g, e, age);

  Dataset ds;
  if (fs::exists(out)) {
    ds = load_dataset(out);
    if (ds.input_dim != static_cast<std::int64_t>(sample.input.size())) {
      throw ConfigError("existing container has different input dimension");
    }
  } else {
    ds.input_dim = static_cast<std::int64_t>(sample.input.size());
    ds.attr_dim = 3;
    ds.name = out.stem().string();
    ds.provenance = "preprocess";
  }
  ds.samples.push_back(std::move(sample));
  ds.class_count = 0;
  for (const Sample& s : ds.samples) {
    ds.class_count = std::max<std::int64_t>(ds.class_count, s.label + 1);
  }
  save_dataset(ds, out);

  std::printf("appended record %zu (z_opt = %.6g mm) to %s\n", ds.samples.size() - 1,
              projected.z_opt, out.string().c_str());
  std::string snap = "[preprocess]\ndepth = " + depth_path + "\nrgb = " + rgb_path +
                     "\nradius = " + format_double(radius) + "\nlabel = " + std::to_string(label) +
                     "\ngender = " + gender + "\nethnicity = " + ethnicity +
                     "\nage = " + format_double(age) + "\n";
  write_text(out.string() + ".cfg", snap);
  return kExitOk;
}

int run_toy(const ToyOptions& options, const fs::path& out_dir) {
  const ToyResult result = toy_experiment(options);
  fs::create_directories(out_dir);

  const auto dump = [&](const Matrix& f, const fs::path& path) {
    std::string csv = "sample,label,age_code,x,y\n";
    for (std::size_t i = 0; i < result.dataset.samples.size(); ++i) {
      const Sample& s = result.dataset.samples[i];
      csv += std::to_string(i) + "," + std::to_string(s.label) + "," +
             format_double(s.attributes.back()) + "," +
             format_double(f(static_cast<std::int64_t>(i), 0)) + "," +
             format_double(f(static_cast<std::int64_t>(i), 1)) + "\n";
    }
    write_text(path, csv);
  };
  dump(result.features_softmax, out_dir / "features_softmax.csv");
  dump(result.features_attr, out_dir / "features_attr.csv");
  result.softmax_run.log.write_csv(out_dir / "train_log_softmax.csv");
  result.attr_run.log.write_csv(out_dir / "train_log_attr.csv");

  std::string report;
  const auto add = [&](const char* name, const ToyMetrics& m) {
    report += std::string(name) + ".mean_span = " + format_double(m.mean_span) + "\n";
    report += std::string(name) + ".same_age_centroid_dist = " + format_double(m.same_age_dist) + "\n";
    report += std::string(name) + ".diff_age_centroid_dist = " + format_double(m.diff_age_dist) + "\n";
    report += std::string(name) + ".ratio = " + format_double(m.ratio) + "\n";
  };
  add("softmax", result.metrics_softmax);
  add("softmax_attr", result.metrics_attr);
  write_text(out_dir / "toy_report.txt", report);

  std::string snap = "seed = " + std::to_string(options.seed) + "\n[toy]\nlambda = " +
                     format_double(options.lambda_attr) + "\ntau = " + format_double(options.tau) +
                     "\niterations = " + std::to_string(options.iterations) +
                     "\nbatch_size = " + std::to_string(options.batch_size) + "\n";
  write_text(out_dir / "resolved.cfg", snap);

  std::fputs(report.c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribute-aware metric learning toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("--config", config_path, "key = value config file with [sections]");

  // synth
  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic attributed dataset");
  synth_cmd->add_option("--preset", synth_args.preset, "fig2, or a name/path of a .preset file");
  synth_cmd->add_option("--scale", synth_args.scale, "override the preset's identity-count divisor");
  synth_cmd->add_option("--samples-per-identity", synth_args.samples_per_identity, "");
  synth_cmd->add_option("--d", synth_args.input_dim, "input dimension");
  synth_cmd->add_option("--attr-signal", synth_args.attr_signal, "");
  synth_cmd->add_option("--identity-noise", synth_args.identity_noise, "");
  synth_cmd->add_option("--observation-noise", synth_args.observation_noise, "");
  synth_cmd->add_option("--nuisance", synth_args.nuisance, "");
  synth_cmd->add_option("--name", synth_args.name, "");
  synth_cmd->add_option("--seed", seed, "global seed");
  synth_cmd->add_option("-o,--out", out, "output .attrset path")->required();

  // train
  TrainArgs train_args;
  std::int64_t feature_dim = 8;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model with joint supervision");
  train_cmd->add_option("--dataset", train_args.dataset, "training .attrset");
  train_cmd->add_option("--combo", train_args.combo,
                        "a=softmax b=+attribute c=+center d=+center+attribute");
  train_cmd->add_option("--lambda", train_args.lambda_attr, "attribute-aware loss weight");
  train_cmd->add_option("--lambda-center", train_args.lambda_center, "center loss weight");
  train_cmd->add_option("--alpha-center", train_args.alpha_center, "center update rate");
  train_cmd->add_option("--tau", train_args.tau, "attribute distance threshold");
  train_cmd->add_option("--pair-cap", train_args.pair_cap, "per-batch pair cap (0 = off)");
  train_cmd->add_option("--lr", train_args.lr, "base learning rate");
  train_cmd->add_option("--milestones", train_args.milestones, "iterations where lr divides");
  train_cmd->add_option("--decay", train_args.decay, "lr divisor at milestones");
  train_cmd->add_option("--batch-size", train_args.batch_size, "");
  train_cmd->add_option("--iterations", train_args.iterations, "");
  train_cmd->add_option("--hidden", train_args.hidden, "hidden layer dims");
  train_cmd->add_option("--activation", train_args.activation, "relu|tanh|identity");
  train_cmd->add_option("--feature-dim", feature_dim, "output feature dimension K");
  train_cmd->add_option("--fine-tune-from", train_args.fine_tune_from, "checkpoint to start from");
  train_cmd->add_option("--seed", seed, "global seed");
  train_cmd->add_option("-o,--out", out, "output directory")->required();

  // eval
  std::vector<std::string> eval_checkpoints;
  std::string eval_dataset;
  CLI::App* eval_cmd = app.add_subcommand("eval", "rank-k / CMC / verification report");
  eval_cmd->add_option("--checkpoint", eval_checkpoints, "checkpoint(s); repeat for a sweep table");
  eval_cmd->add_option("--dataset", eval_dataset, "evaluation .attrset");
  eval_cmd->add_option("-o,--out", out, "output directory")->required();

  // check
  std::string check_checkpoint, check_dataset;
  double check_tau = 0.01;
  CLI::App* check_cmd = app.add_subcommand("check", "verify the feature-distance bounds");
  check_cmd->add_option("--checkpoint", check_checkpoint, "");
  check_cmd->add_option("--dataset", check_dataset, "");
  check_cmd->add_option("--tau", check_tau, "attribute distance threshold");
  check_cmd->add_option("-o,--out", out, "output directory")->required();

  // gradcheck
  std::int64_t gc_instances = 30;
  bool gc_corrupt = false;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gc_cmd->add_option("--instances", gc_instances, "instances per target");
  gc_cmd->add_flag("--corrupt", gc_corrupt, "negative control: perturb one analytic component");
  gc_cmd->add_option("--seed", seed, "global seed");

  // preprocess
  std::string pp_depth, pp_rgb, pp_gender = "male", pp_ethnicity = "asian";
  std::vector<double> pp_nose_tip;
  double pp_radius = kDefaultCropRadiusMm;
  double pp_age = 0.0;
  std::int64_t pp_label = 0;
  CLI::App* pp_cmd = app.add_subcommand("preprocess", "depth crop / reproject / normalize");
  pp_cmd->add_option("--depth", pp_depth, "depth raster with text header");
  pp_cmd->add_option("--rgb", pp_rgb, "raw 112x96 RGB triplets");
  pp_cmd->add_option("--nose-tip", pp_nose_tip, "x y z in mm")->expected(3);
  pp_cmd->add_option("--radius", pp_radius, "crop radius in mm");
  pp_cmd->add_option("--label", pp_label, "identity label for the record");
  pp_cmd->add_option("--gender", pp_gender, "male|female");
  pp_cmd->add_option("--ethnicity", pp_ethnicity, "asian|caucasian");
  pp_cmd->add_option("--age", pp_age, "age in years");
  pp_cmd->add_option("-o,--out", out, "ATTRSET1 container to append to")->required();

  // toy
  ToyOptions toy_options;
  CLI::App* toy_cmd = app.add_subcommand("toy", "two-model 2-D toy comparison");
  toy_cmd->add_option("--lambda", toy_options.lambda_attr, "");
  toy_cmd->add_option("--tau", toy_options.tau, "");
  toy_cmd->add_option("--iterations", toy_options.iterations, "");
  toy_cmd->add_option("--batch-size", toy_options.batch_size, "");
  toy_cmd->add_option("--seed", seed, "global seed");
  toy_cmd->add_option("-o,--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    ConfigFile cfg = config_path.empty() ? ConfigFile::parse_string("", "<none>")
                                         : ConfigFile::parse_file(config_path);
    cfg.require_known(kKnownConfigKeys);

    if (synth_cmd->parsed()) {
      fill_from_config(*synth_cmd, "--seed", cfg, "seed", seed);
      fill_from_config(*synth_cmd, "--out", cfg, "out", out);
      fill_from_config(*synth_cmd, "--preset", cfg, "synth.preset", synth_args.preset);
      fill_from_config(*synth_cmd, "--scale", cfg, "synth.scale", synth_args.scale);
      fill_from_config(*synth_cmd, "--samples-per-identity", cfg, "synth.samples_per_identity",
                       synth_args.samples_per_identity);
      fill_from_config(*synth_cmd, "--d", cfg, "synth.d", synth_args.input_dim);
      fill_from_config(*synth_cmd, "--attr-signal", cfg, "synth.attr_signal", synth_args.attr_signal);
      fill_from_config(*synth_cmd, "--identity-noise", cfg, "synth.identity_noise",
                       synth_args.identity_noise);
      fill_from_config(*synth_cmd, "--observation-noise", cfg, "synth.observation_noise",
                       synth_args.observation_noise);
      fill_from_config(*synth_cmd, "--nuisance", cfg, "synth.nuisance", synth_args.nuisance);
      fill_from_config(*synth_cmd, "--name", cfg, "synth.name", synth_args.name);
      return run_synth(synth_args, seed, out);
    }
    if (train_cmd->parsed()) {
      fill_from_config(*train_cmd, "--seed", cfg, "seed", seed);
      fill_from_config(*train_cmd, "--out", cfg, "out", out);
      fill_from_config(*train_cmd, "--dataset", cfg, "train.dataset", train_args.dataset);
      fill_from_config(*train_cmd, "--combo", cfg, "train.combo", train_args.combo);
      fill_from_config(*train_cmd, "--lambda", cfg, "train.lambda", train_args.lambda_attr);
      fill_from_config(*train_cmd, "--lambda-center", cfg, "train.lambda_center",
                       train_args.lambda_center);
      fill_from_config(*train_cmd, "--alpha-center", cfg, "train.alpha_center",
                       train_args.alpha_center);
      fill_from_config(*train_cmd, "--tau", cfg, "train.tau", train_args.tau);
      fill_from_config(*train_cmd, "--pair-cap", cfg, "train.pair_cap", train_args.pair_cap);
      fill_from_config(*train_cmd, "--lr", cfg, "train.lr", train_args.lr);
      fill_from_config(*train_cmd, "--milestones", cfg, "train.milestones", train_args.milestones);
      fill_from_config(*train_cmd, "--decay", cfg, "train.decay", train_args.decay);
      fill_from_config(*train_cmd, "--batch-size", cfg, "train.batch_size", train_args.batch_size);
      fill_from_config(*train_cmd, "--iterations", cfg, "train.iterations", train_args.iterations);
      fill_from_config(*train_cmd, "--hidden", cfg, "mlp.hidden", train_args.hidden);
      fill_from_config(*train_cmd, "--activation", cfg, "mlp.activation", train_args.activation);
      fill_from_config(*train_cmd, "--feature-dim", cfg, "mlp.feature_dim", feature_dim);
      fill_from_config(*train_cmd, "--fine-tune-from", cfg, "train.fine_tune_from",
                       train_args.fine_tune_from);
      if (train_args.dataset.empty()) throw ConfigError("train: missing dataset");
      return run_train(train_args, seed, out, feature_dim);
    }
    if (eval_cmd->parsed()) {
      fill_from_config(*eval_cmd, "--dataset", cfg, "eval.dataset", eval_dataset);
      if (eval_checkpoints.empty() && cfg.has("eval.checkpoint")) {
        eval_checkpoints.push_back(*cfg.get("eval.checkpoint"));
      }
      if (eval_checkpoints.empty()) throw ConfigError("eval: missing checkpoint");
      if (eval_dataset.empty()) throw ConfigError("eval: missing dataset");
      return run_eval(eval_checkpoints, eval_dataset, out);
    }
    if (check_cmd->parsed()) {
      fill_from_config(*check_cmd, "--checkpoint", cfg, "check.checkpoint", check_checkpoint);
      fill_from_config(*check_cmd, "--dataset", cfg, "check.dataset", check_dataset);
      fill_from_config(*check_cmd, "--tau", cfg, "check.tau", check_tau);
      if (check_checkpoint.empty() || check_dataset.empty()) {
        throw ConfigError("check: missing checkpoint or dataset");
      }
      return run_check(check_checkpoint, check_dataset, check_tau, out);
    }
    if (gc_cmd->parsed()) {
      const GradCheckReport report = run_gradcheck(seed, gc_instances, gc_corrupt);
      std::fputs(report.table().c_str(), stdout);
      return report.all_pass() ? kExitOk : kExitNumeric;
    }
    if (pp_cmd->parsed()) {
      fill_from_config(*pp_cmd, "--depth", cfg, "preprocess.depth", pp_depth);
      fill_from_config(*pp_cmd, "--rgb", cfg, "preprocess.rgb", pp_rgb);
      fill_from_config(*pp_cmd, "--radius", cfg, "preprocess.radius", pp_radius);
      fill_from_config(*pp_cmd, "--label", cfg, "preprocess.label", pp_label);
      fill_from_config(*pp_cmd, "--gender", cfg, "preprocess.gender", pp_gender);
      fill_from_config(*pp_cmd, "--ethnicity", cfg, "preprocess.ethnicity", pp_ethnicity);
      fill_from_config(*pp_cmd, "--age", cfg, "preprocess.age", pp_age);
      if (pp_depth.empty() || pp_rgb.empty()) throw ConfigError("preprocess: missing rasters");
      if (pp_nose_tip.size() != 3) throw ConfigError("preprocess: --nose-tip x y z required");
      return run_preprocess(pp_depth, pp_rgb, pp_nose_tip, pp_radius, pp_label, pp_gender,
                            pp_ethnicity, pp_age, out);
    }
    if (toy_cmd->parsed()) {
      fill_from_config(*toy_cmd, "--seed", cfg, "seed", seed);
      fill_from_config(*toy_cmd, "--lambda", cfg, "toy.lambda", toy_options.lambda_attr);
      fill_from_config(*toy_cmd, "--tau", cfg, "toy.tau", toy_options.tau);
      fill_from_config(*toy_cmd, "--iterations", cfg, "toy.iterations", toy_options.iterations);
      fill_from_config(*toy_cmd, "--batch-size", cfg, "toy.batch_size", toy_options.batch_size);
      toy_options.seed = seed;
      return run_toy(toy_options, out);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const DegenerateInputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitOk;
}
