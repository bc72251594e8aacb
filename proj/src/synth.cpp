#include "attrloss/synth.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "attrloss/rng.hpp"

namespace attrloss {

void SynthSpec::validate() const {
  if (input_dim <= 0) throw ConfigError("synth: input_dim must be positive");
  if (samples_per_identity <= 0) throw ConfigError("synth: samples_per_identity must be positive");
  if (attr_signal < 0 || identity_noise < 0 || observation_noise < 0 || nuisance < 0) {
    throw ConfigError("synth: noise magnitudes must be non-negative");
  }
  std::int64_t total = 0;
  for (const SynthGroup& g : groups) {
    if (g.identity_count < 0) throw ConfigError("synth: identity counts must be non-negative");
    if (g.age_lo < 0 || g.age_hi < g.age_lo) throw ConfigError("synth: invalid age bucket bounds");
    total += g.identity_count;
  }
  if (total < 2) throw ConfigError("synth: need at least two identities");
}

Dataset generate(const SynthSpec& spec) {
  spec.validate();
  const std::int64_t d = spec.input_dim;
  constexpr std::int64_t h = 3;

  // Stream 1: the mixing matrix, row-major.
  Rng mix_rng(derive_seed(spec.seed, "synth.mixing"));
  Matrix mixing(d, h);
  for (double& x : mixing.data) x = mix_rng.gaussian();

  // Stream 2: everything else, in identity order: age, prototype noise,
  // then per sample the observation noise and (if enabled) the offset.
  Rng rng(derive_seed(spec.seed, "synth.data"));

  Dataset ds;
  ds.input_dim = d;
  ds.attr_dim = h;
  ds.name = spec.name;
  ds.provenance = "synth seed=" + std::to_string(spec.seed);

  std::int32_t label = 0;
  std::vector<double> prototype(static_cast<std::size_t>(d));
  for (const SynthGroup& g : spec.groups) {
    for (std::int64_t id = 0; id < g.identity_count; ++id, ++label) {
      const double age = rng.next_in_left_open(g.age_lo, g.age_hi);
      const std::vector<double> attrs = encode_attributes(g.gender, g.ethnicity, age);
      for (std::int64_t row = 0; row < d; ++row) {
        double ap = 0.0;
        for (std::int64_t a = 0; a < h; ++a) ap += mixing(row, a) * attrs[static_cast<std::size_t>(a)];
        prototype[static_cast<std::size_t>(row)] =
            spec.attr_signal * ap + spec.identity_noise * rng.gaussian();
      }
      for (std::int64_t s = 0; s < spec.samples_per_identity; ++s) {
        Sample sample;
        sample.label = label;
        sample.attributes = attrs;
        sample.input.resize(static_cast<std::size_t>(d));
        for (std::int64_t row = 0; row < d; ++row) {
          sample.input[static_cast<std::size_t>(row)] =
              prototype[static_cast<std::size_t>(row)] + spec.observation_noise * rng.gaussian();
        }
        if (spec.nuisance > 0.0) {
          const double offset = spec.nuisance * rng.gaussian();
          for (double& x : sample.input) x += offset;
        }
        ds.samples.push_back(std::move(sample));
      }
    }
  }
  ds.class_count = label;
  validate_dataset(ds);
  return ds;
}

SynthSpec toy_fig2_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.input_dim = 8;
  spec.samples_per_identity = 40;
  spec.attr_signal = 1.0;
  spec.identity_noise = 1.0;
  spec.observation_noise = 0.25;
  spec.nuisance = 0.0;
  spec.seed = seed;
  spec.name = "toy_fig2";
  for (double age : {28.0, 50.0, 70.0}) {
    spec.groups.push_back({Gender::male, Ethnicity::asian, age, age, 3});
  }
  return spec;
}

Dataset make_toy_fig2(std::uint64_t seed) { return generate(toy_fig2_spec(seed)); }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

SynthSpec load_preset(const std::filesystem::path& path, double scale_override,
                      std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open preset: " + path.string());

  SynthSpec spec;
  spec.seed = seed;
  spec.name = path.stem().string();
  double scale = 1.0;
  double asian_fraction = 0.0;
  struct RawGroup {
    Gender gender;
    double lo, hi;
    double count;
  };
  std::vector<RawGroup> raw;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "name") {
      spec.name = value;
    } else if (key == "scale") {
      scale = std::stod(value);
    } else if (key == "asian_fraction") {
      asian_fraction = std::stod(value);
    } else if (key == "group") {
      std::istringstream fields(value);
      std::string gender;
      RawGroup g{};
      if (!(fields >> gender >> g.lo >> g.hi >> g.count)) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": group needs <gender> <age_lo> <age_hi> <count>");
      }
      if (gender == "male") g.gender = Gender::male;
      else if (gender == "female") g.gender = Gender::female;
      else throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": unknown gender");
      raw.push_back(g);
    } else {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key +
                        "'");
    }
  }
  if (scale_override > 0.0) scale = scale_override;
  if (scale <= 0.0) throw ConfigError(path.string() + ": scale must be positive");
  if (asian_fraction < 0.0 || asian_fraction > 1.0) {
    throw ConfigError(path.string() + ": asian_fraction must lie in [0, 1]");
  }

  for (const RawGroup& g : raw) {
    const auto scaled = static_cast<std::int64_t>(std::llround(g.count / scale));
    const auto asian = static_cast<std::int64_t>(std::llround(static_cast<double>(scaled) * asian_fraction));
    const std::int64_t caucasian = scaled - asian;
    if (asian > 0) spec.groups.push_back({g.gender, Ethnicity::asian, g.lo, g.hi, asian});
    if (caucasian > 0) spec.groups.push_back({g.gender, Ethnicity::caucasian, g.lo, g.hi, caucasian});
  }
  return spec;
}

}  // namespace attrloss
