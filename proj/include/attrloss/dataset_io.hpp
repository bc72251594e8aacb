#pragma once

#include <filesystem>

#include "attrloss/types.hpp"

namespace attrloss {

// ATTRSET1 container: 8-byte magic, little-endian u32 (N, D, C, H), then N
// records of (u32 label, H f64 attributes, D f64 input). A sidecar
// "<path>.manifest" holds key = value lines for name and provenance.

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace attrloss
