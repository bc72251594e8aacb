#include "attrloss/dataset_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace attrloss {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'T', 'R', 'S', 'E', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_f64(std::ostream& out, const double* v, std::size_t n) {
  out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_f64(std::istream& in, double* v, std::size_t n) {
  in.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * sizeof(double)));
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".manifest";
  return p;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  validate_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(ds.samples.size()));
  write_u32(out, static_cast<std::uint32_t>(ds.input_dim));
  write_u32(out, static_cast<std::uint32_t>(ds.class_count));
  write_u32(out, static_cast<std::uint32_t>(ds.attr_dim));
  for (const Sample& s : ds.samples) {
    write_u32(out, static_cast<std::uint32_t>(s.label));
    write_f64(out, s.attributes.data(), s.attributes.size());
    write_f64(out, s.input.data(), s.input.size());
  }
  if (!out) throw IoError("write failed: " + path.string());

  std::ofstream man(manifest_path(path), std::ios::trunc);
  if (!man) throw IoError("cannot open for writing: " + manifest_path(path).string());
  man << "name = " << ds.name << "\n";
  man << "provenance = " << ds.provenance << "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());

  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": bad magic, not an ATTRSET1 container");
  }

  Dataset ds;
  const std::uint32_t n = read_u32(in);
  ds.input_dim = read_u32(in);
  ds.class_count = read_u32(in);
  ds.attr_dim = read_u32(in);
  if (!in) throw FormatError(path.string() + ": truncated header");

  ds.samples.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Sample& s = ds.samples[i];
    s.label = static_cast<std::int32_t>(read_u32(in));
    s.attributes.resize(static_cast<std::size_t>(ds.attr_dim));
    read_f64(in, s.attributes.data(), s.attributes.size());
    s.input.resize(static_cast<std::size_t>(ds.input_dim));
    read_f64(in, s.input.data(), s.input.size());
    if (!in) throw FormatError(path.string() + ": truncated record " + std::to_string(i));
  }

  ds.name = path.stem().string();
  std::ifstream man(manifest_path(path));
  if (man) {
    std::string line;
    while (std::getline(man, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "name") ds.name = value;
      if (key == "provenance") ds.provenance = value;
    }
  }

  validate_dataset(ds);
  return ds;
}

}  // namespace attrloss
