#pragma once

#include <filesystem>

#include "attrloss/mlp.hpp"
#include "attrloss/types.hpp"

namespace attrloss {

// ATTRCKP1 container: 8-byte magic, u32 layer-dim count, u32 dims, u32
// activation code, u32 C, u32 H, u64 iteration, then f64 blocks in order:
// per-layer weights (row-major) and biases, classifier W, classifier b,
// G, centers.

struct Checkpoint {
  MlpSpec spec;
  ModelParams params;
  std::int64_t class_count = 0;
  std::int64_t attr_dim = 0;
  std::int64_t iteration = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace attrloss
