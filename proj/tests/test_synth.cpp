#include <doctest.h>

#include <cmath>
#include <set>

#include "attrloss/synth.hpp"

using namespace attrloss;

TEST_CASE("zero observation noise collapses identities to their prototypes") {
  SynthSpec spec;
  spec.input_dim = 6;
  spec.groups = {{Gender::male, Ethnicity::asian, 20, 30, 2},
                 {Gender::female, Ethnicity::caucasian, 40, 50, 2}};
  spec.samples_per_identity = 5;
  spec.observation_noise = 0.0;
  spec.seed = 3;
  const Dataset ds = generate(spec);
  REQUIRE(ds.samples.size() == 20);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const std::size_t first = (i / 5) * 5;
    CHECK(ds.samples[i].input == ds.samples[first].input);
    CHECK(ds.samples[i].label == ds.samples[first].label);
  }
}

TEST_CASE("degenerate spec without signal or identity noise is allowed") {
  SynthSpec spec;
  spec.input_dim = 4;
  spec.groups = {{Gender::male, Ethnicity::asian, 30, 30, 3}};
  spec.samples_per_identity = 2;
  spec.attr_signal = 0.0;
  spec.identity_noise = 0.0;
  spec.observation_noise = 0.0;
  spec.seed = 5;
  const Dataset ds = generate(spec);
  for (const Sample& s : ds.samples) CHECK(s.input == ds.samples[0].input);
}

TEST_CASE("per-group identity counts are exact") {
  SynthSpec spec;
  spec.input_dim = 4;
  spec.groups = {{Gender::male, Ethnicity::asian, 20, 30, 4},
                 {Gender::female, Ethnicity::asian, 20, 30, 7},
                 {Gender::male, Ethnicity::caucasian, 50, 60, 2}};
  spec.samples_per_identity = 3;
  spec.seed = 11;
  const Dataset ds = generate(spec);
  CHECK(ds.class_count == 13);
  // identities are labeled in group order
  std::set<std::int32_t> group0, group1, group2;
  for (const Sample& s : ds.samples) {
    if (s.attributes[0] == 1.0 && s.attributes[1] == 1.0) group0.insert(s.label);
    if (s.attributes[0] == -1.0 && s.attributes[1] == 1.0) group1.insert(s.label);
    if (s.attributes[0] == 1.0 && s.attributes[1] == -1.0) group2.insert(s.label);
  }
  CHECK(group0.size() == 4);
  CHECK(group1.size() == 7);
  CHECK(group2.size() == 2);
}

TEST_CASE("ages are drawn inside the bucket") {
  SynthSpec spec;
  spec.input_dim = 4;
  spec.groups = {{Gender::male, Ethnicity::asian, 20, 30, 50}};
  spec.samples_per_identity = 1;
  spec.seed = 13;
  const Dataset ds = generate(spec);
  const double lo_code = 2.0 * 20.0 / 100.0 - 1.0;
  const double hi_code = 2.0 * 30.0 / 100.0 - 1.0;
  for (const Sample& s : ds.samples) {
    CHECK(s.attributes[2] > lo_code);
    CHECK(s.attributes[2] <= hi_code);
  }
}

TEST_CASE("toy set pins nine identities with exact age codes") {
  const Dataset ds = make_toy_fig2(7);
  CHECK(ds.class_count == 9);
  CHECK(ds.input_dim == 8);
  CHECK(ds.samples.size() == 9 * 40);

  std::set<std::vector<double>> distinct;
  for (const Sample& s : ds.samples) distinct.insert(s.attributes);
  CHECK(distinct.size() == 3);
  std::set<double> age_codes;
  for (const auto& attrs : distinct) {
    CHECK(attrs[0] == 1.0);
    CHECK(attrs[1] == 1.0);
    age_codes.insert(attrs[2]);
  }
  // encoded {28, 50, 70} under 2*age/100 - 1
  const std::set<double> expected = {2.0 * 28.0 / 100.0 - 1.0, 0.0, 2.0 * 70.0 / 100.0 - 1.0};
  CHECK(age_codes == expected);
}

TEST_CASE("generation is byte-deterministic in the seed") {
  const Dataset a = make_toy_fig2(99);
  const Dataset b = make_toy_fig2(99);
  const Dataset c = make_toy_fig2(100);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].input == b.samples[i].input);
    CHECK(a.samples[i].attributes == b.samples[i].attributes);
  }
  CHECK(a.samples[0].input != c.samples[0].input);
}

TEST_CASE("preset loading scales and splits ethnicities") {
  const std::filesystem::path preset = std::filesystem::path(ATTRLOSS_PRESET_DIR) / "set1.preset";
  const SynthSpec spec = load_preset(preset, 0.0, 1);  // keep the file's scale of 100

  // the (male, (0,25]) row: 6613 / 100 -> 66, split 6 asian + 60 caucasian
  std::int64_t male_young_total = 0;
  for (const SynthGroup& g : spec.groups) {
    if (g.gender == Gender::male && g.age_lo == 0.0 && g.age_hi == 25.0) {
      male_young_total += g.identity_count;
      if (g.ethnicity == Ethnicity::asian) CHECK(g.identity_count == 6);
    }
  }
  CHECK(male_young_total == 66);

  const SynthSpec bigger = load_preset(preset, 50.0, 1);
  std::int64_t total = 0, total_bigger = 0;
  for (const SynthGroup& g : spec.groups) total += g.identity_count;
  for (const SynthGroup& g : bigger.groups) total_bigger += g.identity_count;
  CHECK(total_bigger > total);

  CHECK_THROWS_AS(load_preset(std::filesystem::path(ATTRLOSS_PRESET_DIR) / "missing.preset", 0.0, 1),
                  IoError);
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec spec;
  spec.input_dim = 4;
  spec.groups = {{Gender::male, Ethnicity::asian, 30, 20, 5}};  // lo > hi
  CHECK_THROWS_AS(generate(spec), ConfigError);

  spec.groups = {{Gender::male, Ethnicity::asian, 20, 30, 1}};  // only one identity
  CHECK_THROWS_AS(generate(spec), ConfigError);
}
