#include "attrloss/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace attrloss {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'T', 'R', 'C', 'K', 'P', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_block(std::ostream& out, const double* v, std::size_t n) {
  out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_block(std::istream& in, double* v, std::size_t n) {
  in.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * sizeof(double)));
}

std::uint32_t activation_code(Activation a) {
  switch (a) {
    case Activation::relu: return 0;
    case Activation::tanh: return 1;
    case Activation::identity: return 2;
  }
  return 0;
}

Activation activation_from_code(std::uint32_t c) {
  switch (c) {
    case 0: return Activation::relu;
    case 1: return Activation::tanh;
    case 2: return Activation::identity;
    default: throw FormatError("checkpoint: unknown activation code " + std::to_string(c));
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.spec.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());

  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(ckpt.spec.layer_dims.size()));
  for (std::int64_t d : ckpt.spec.layer_dims) write_u32(out, static_cast<std::uint32_t>(d));
  write_u32(out, activation_code(ckpt.spec.activation));
  write_u32(out, static_cast<std::uint32_t>(ckpt.class_count));
  write_u32(out, static_cast<std::uint32_t>(ckpt.attr_dim));
  write_u64(out, static_cast<std::uint64_t>(ckpt.iteration));

  for (std::size_t l = 0; l < ckpt.params.theta.weights.size(); ++l) {
    write_block(out, ckpt.params.theta.weights[l].data.data(),
                ckpt.params.theta.weights[l].data.size());
    write_block(out, ckpt.params.theta.biases[l].data(), ckpt.params.theta.biases[l].size());
  }
  write_block(out, ckpt.params.classifier_w.data.data(), ckpt.params.classifier_w.data.size());
  write_block(out, ckpt.params.classifier_b.data(), ckpt.params.classifier_b.size());
  write_block(out, ckpt.params.attr_map.data.data(), ckpt.params.attr_map.data.size());
  write_block(out, ckpt.params.centers.data.data(), ckpt.params.centers.data.size());
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());

  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": bad magic, not an ATTRCKP1 checkpoint");
  }

  Checkpoint ckpt;
  const std::uint32_t ndims = read_u32(in);
  if (!in || ndims < 2 || ndims > 64) throw FormatError(path.string() + ": bad layer count");
  ckpt.spec.layer_dims.resize(ndims);
  for (std::uint32_t i = 0; i < ndims; ++i) ckpt.spec.layer_dims[i] = read_u32(in);
  ckpt.spec.activation = activation_from_code(read_u32(in));
  ckpt.class_count = read_u32(in);
  ckpt.attr_dim = read_u32(in);
  ckpt.iteration = static_cast<std::int64_t>(read_u64(in));
  if (!in) throw FormatError(path.string() + ": truncated header");
  ckpt.spec.validate();

  const std::int64_t k = ckpt.spec.feature_dim();
  for (std::size_t l = 0; l + 1 < ckpt.spec.layer_dims.size(); ++l) {
    Matrix w(ckpt.spec.layer_dims[l], ckpt.spec.layer_dims[l + 1]);
    read_block(in, w.data.data(), w.data.size());
    ckpt.params.theta.weights.push_back(std::move(w));
    std::vector<double> b(static_cast<std::size_t>(ckpt.spec.layer_dims[l + 1]), 0.0);
    read_block(in, b.data(), b.size());
    ckpt.params.theta.biases.push_back(std::move(b));
  }
  ckpt.params.classifier_w = Matrix(k, ckpt.class_count);
  read_block(in, ckpt.params.classifier_w.data.data(), ckpt.params.classifier_w.data.size());
  ckpt.params.classifier_b.assign(static_cast<std::size_t>(ckpt.class_count), 0.0);
  read_block(in, ckpt.params.classifier_b.data(), ckpt.params.classifier_b.size());
  ckpt.params.attr_map = Matrix(k, ckpt.attr_dim);
  read_block(in, ckpt.params.attr_map.data.data(), ckpt.params.attr_map.data.size());
  ckpt.params.centers = Matrix(ckpt.class_count, k);
  read_block(in, ckpt.params.centers.data.data(), ckpt.params.centers.data.size());
  if (!in) throw FormatError(path.string() + ": truncated parameter blocks");
  if (!params_all_finite(ckpt.params)) throw FormatError(path.string() + ": non-finite parameter");
  return ckpt;
}

}  // namespace attrloss
