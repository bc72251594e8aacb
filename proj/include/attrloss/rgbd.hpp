#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "attrloss/matrix.hpp"

namespace attrloss {

struct Intrinsics {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
};

/// Depth raster in millimetres; 0 marks a missing measurement.
struct DepthImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<double> depth_mm;  // row-major, height x width
  Intrinsics intrinsics;

  double at(std::int64_t row, std::int64_t col) const {
    return depth_mm[static_cast<std::size_t>(row * width + col)];
  }
};

struct PointCloud {
  std::vector<std::array<double, 3>> points;  // millimetres, camera frame
};

constexpr std::int64_t kFaceWidth = 96;
constexpr std::int64_t kFaceHeight = 112;
constexpr double kDefaultCropRadiusMm = 90.0;

/// Pinhole back-projection of every valid pixel:
/// (u, v, z) -> ((u - cx) z / fx, (v - cy) z / fy, z).
PointCloud unproject(const DepthImage& depth);

/// Keeps the points strictly inside the sphere around the nose tip.
PointCloud crop_sphere(const PointCloud& cloud, const std::array<double, 3>& nose_tip_mm,
                       double radius_mm);

/// Depth at which a crop sphere of radius r spans the full output frame:
/// max(2 r fx / W, 2 r fy / H).
double optimal_depth(double radius_mm, const Intrinsics& intr, std::int64_t out_width,
                     std::int64_t out_height);

struct ProjectionResult {
  DepthImage depth;   // out_height x out_width, principal point at the grid center
  double z_opt = 0.0;
};

/// Translates the cloud so its centroid sits at (0, 0, z_opt) and splats it
/// onto the output grid with bilinear weights; accumulated depth is weight-
/// normalized and zero-weight pixels stay missing.
ProjectionResult recenter_and_project(const PointCloud& cloud, const Intrinsics& intr,
                                      double radius_mm, std::int64_t out_width = kFaceWidth,
                                      std::int64_t out_height = kFaceHeight);

/// Six channels per pixel (R, G, B, x, y, z), all mapped into [-1, 1]:
/// colors linearly from [0, 255], geometry per axis by
/// (2v - max - min) / (max - min) over the valid pixels. Geometry channels
/// of masked pixels are zero.
struct NormalizedFaceTensor {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<double> values;  // row-major, 6 per pixel
  std::vector<std::uint8_t> mask;

  std::vector<double> flatten() const { return values; }
};

NormalizedFaceTensor normalize_tensor(const std::vector<std::uint8_t>& rgb,
                                      const DepthImage& projected);

/// Per-axis min/max normalization used by the geometry channels; exposed so
/// the idempotence property can be tested directly.
void normalize_extent(std::span<double> values);

// Raster I/O. Depth files carry a text header (width/height/intrinsics,
// terminated by an `end_header` line) followed by row-major u16
// little-endian millimetres. RGB files are raw interleaved 8-bit triplets
// of the fixed 112x96 crop.
DepthImage load_depth_raster(const std::filesystem::path& path);
void save_depth_raster(const DepthImage& depth, const std::filesystem::path& path);
std::vector<std::uint8_t> load_rgb_raster(const std::filesystem::path& path,
                                          std::int64_t width = kFaceWidth,
                                          std::int64_t height = kFaceHeight);

}  // namespace attrloss
