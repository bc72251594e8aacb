#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attrloss/attributes.hpp"
#include "attrloss/types.hpp"

namespace attrloss {

/// One identity group: ages are drawn uniformly in (age_lo, age_hi]
/// (age_lo == age_hi pins the age exactly).
struct SynthGroup {
  Gender gender = Gender::male;
  Ethnicity ethnicity = Ethnicity::asian;
  double age_lo = 0.0;
  double age_hi = 0.0;
  std::int64_t identity_count = 0;
};

struct SynthSpec {
  std::int64_t input_dim = 16;
  std::vector<SynthGroup> groups;
  std::int64_t samples_per_identity = 4;
  double attr_signal = 1.0;       // weight of the attribute-driven prototype part
  double identity_noise = 1.0;    // per-identity Gaussian prototype part
  double observation_noise = 0.1; // per-sample Gaussian noise
  double nuisance = 0.0;          // per-sample uniform brightness-style offset
  std::uint64_t seed = 0;
  std::string name = "synthetic";

  void validate() const;
};

/// Deterministic generation: identity prototypes are
/// attr_signal * (A p) + identity_noise * xi with a fixed seeded mixing
/// matrix A, and samples add observation noise (plus the optional offset).
/// Single-threaded; the draw order is part of the format contract.
Dataset generate(const SynthSpec& spec);

/// The nine-identity toy set: same gender and ethnicity, ages exactly
/// {28, 50, 70} with three identities each.
Dataset make_toy_fig2(std::uint64_t seed);
SynthSpec toy_fig2_spec(std::uint64_t seed);

/// Loads a .preset file: `group = <gender> <age_lo> <age_hi> <count>` rows
/// plus `scale`, `asian_fraction`, and `name` keys. Identity counts are
/// divided by the scale (rounded to nearest) and split across ethnicities
/// by the Asian fraction. scale_override <= 0 keeps the file's scale.
SynthSpec load_preset(const std::filesystem::path& path, double scale_override,
                      std::uint64_t seed);

}  // namespace attrloss
