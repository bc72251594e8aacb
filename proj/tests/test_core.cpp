#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "attrloss/attributes.hpp"
#include "attrloss/dataset_io.hpp"
#include "attrloss/rng.hpp"

using namespace attrloss;
namespace fs = std::filesystem;

TEST_CASE("attribute encoding endpoints and codes") {
  CHECK(encode_attributes(Gender::male, Ethnicity::asian, 50.0) ==
        std::vector<double>{1.0, 1.0, 0.0});
  CHECK(encode_attributes(Gender::female, Ethnicity::caucasian, 100.0) ==
        std::vector<double>{-1.0, -1.0, 1.0});
  // Truncation at 100 forces the age endpoint.
  CHECK(encode_attributes(Gender::female, Ethnicity::asian, 130.0) ==
        std::vector<double>{-1.0, 1.0, 1.0});

  const auto p = encode_attributes(Gender::male, Ethnicity::caucasian, 28.0);
  const double oracle = 2.0 * std::min(28.0, 100.0) / 100.0 - 1.0;
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -1.0);
  CHECK(p[2] == doctest::Approx(-0.44).epsilon(1e-12));
  CHECK(p[2] == oracle);
}

TEST_CASE("attribute encoding is monotone in age below the truncation point") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0.0, 99.0);
    const double b = a + rng.uniform(1e-6, 100.0 - a);
    const auto pa = encode_attributes(Gender::male, Ethnicity::asian, a);
    const auto pb = encode_attributes(Gender::male, Ethnicity::asian, b);
    CHECK(pa[2] < pb[2]);
  }
}

TEST_CASE("attribute distance examples and properties") {
  const std::vector<double> zero{0, 0, 0};
  const std::vector<double> e0{1, 0, 0};
  const std::vector<double> neg_e0{-1, 0, 0};
  const std::vector<double> diag{1, 1, 0};
  const std::vector<double> short_vec{1, 0};
  CHECK(attribute_distance(zero, zero) == 0.0);
  CHECK(attribute_distance(e0, neg_e0) == 2.0);
  CHECK(attribute_distance(diag, zero) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(attribute_distance(short_vec, zero), DimensionError);

  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(3), b(3), c(3);
    for (int d = 0; d < 3; ++d) {
      a[d] = rng.uniform(-1, 1);
      b[d] = rng.uniform(-1, 1);
      c[d] = rng.uniform(-1, 1);
    }
    CHECK(attribute_distance(a, c) <=
          attribute_distance(a, b) + attribute_distance(b, c) + 1e-12);
    CHECK(attribute_distance(a, b) == attribute_distance(b, a));
  }
}

namespace {

Dataset tiny_dataset() {
  Dataset ds;
  ds.input_dim = 4;
  ds.class_count = 2;
  ds.attr_dim = 3;
  ds.name = "tiny";
  ds.provenance = "unit test";
  ds.samples.push_back({{0.1, -0.25, 0.5, 1.0 / 3.0}, 0, {1.0, 1.0, 0.0}});
  ds.samples.push_back({{-0.7, 0.2, 0.9, -0.053}, 1, {-1.0, 1.0, 0.44}});
  return ds;
}

}  // namespace

TEST_CASE("dataset round trip is bit exact including metadata") {
  const fs::path path = fs::temp_directory_path() / "attrloss_core_roundtrip.attrset";
  const Dataset ds = tiny_dataset();
  save_dataset(ds, path);
  const Dataset back = load_dataset(path);
  REQUIRE(back.samples.size() == ds.samples.size());
  CHECK(back.input_dim == ds.input_dim);
  CHECK(back.class_count == ds.class_count);
  CHECK(back.attr_dim == ds.attr_dim);
  CHECK(back.name == ds.name);
  CHECK(back.provenance == ds.provenance);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].label == ds.samples[i].label);
    CHECK(back.samples[i].input == ds.samples[i].input);        // bitwise
    CHECK(back.samples[i].attributes == ds.samples[i].attributes);
  }
  fs::remove(path);
  fs::remove(path.string() + ".manifest");
}

TEST_CASE("dataset validation rejects broken invariants") {
  Dataset ds = tiny_dataset();
  ds.samples[1].label = 5;  // outside [0, C)
  CHECK_THROWS_AS(validate_dataset(ds), FormatError);

  ds = tiny_dataset();
  ds.samples.pop_back();  // class 1 uncovered
  CHECK_THROWS_AS(validate_dataset(ds), FormatError);

  ds = tiny_dataset();
  ds.samples.clear();
  CHECK_THROWS_AS(validate_dataset(ds), FormatError);

  ds = tiny_dataset();
  ds.samples[0].input[2] = std::nan("");
  CHECK_THROWS_WITH_AS(validate_dataset(ds), doctest::Contains("record 0"), FormatError);
}

TEST_CASE("loading a corrupt container names the problem") {
  const fs::path path = fs::temp_directory_path() / "attrloss_core_corrupt.attrset";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTMAGIC";
  }
  CHECK_THROWS_AS(load_dataset(path), FormatError);
  fs::remove(path);
  CHECK_THROWS_AS(load_dataset(path), IoError);
}
