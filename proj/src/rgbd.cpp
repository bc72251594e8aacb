#include "attrloss/rgbd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "attrloss/parallel.hpp"

namespace attrloss {

PointCloud unproject(const DepthImage& depth) {
  if (depth.intrinsics.fx <= 0.0 || depth.intrinsics.fy <= 0.0) {
    throw DimensionError("unproject: focal lengths must be positive");
  }
  // Valid pixels are counted first so each output point has its slot.
  std::vector<std::int64_t> slot(depth.depth_mm.size(), -1);
  std::int64_t count = 0;
  for (std::size_t i = 0; i < depth.depth_mm.size(); ++i) {
    if (depth.depth_mm[i] > 0.0) slot[i] = count++;
  }
  PointCloud cloud;
  cloud.points.resize(static_cast<std::size_t>(count));
  parallel_for(depth.height, [&](std::int64_t v) {
    for (std::int64_t u = 0; u < depth.width; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v * depth.width + u);
      if (slot[idx] < 0) continue;
      const double z = depth.depth_mm[idx];
      cloud.points[static_cast<std::size_t>(slot[idx])] = {
          (static_cast<double>(u) - depth.intrinsics.cx) * z / depth.intrinsics.fx,
          (static_cast<double>(v) - depth.intrinsics.cy) * z / depth.intrinsics.fy, z};
    }
  });
  return cloud;
}

PointCloud crop_sphere(const PointCloud& cloud, const std::array<double, 3>& nose_tip_mm,
                       double radius_mm) {
  if (radius_mm <= 0.0) throw DimensionError("crop_sphere: radius must be positive");
  PointCloud out;
  for (const auto& p : cloud.points) {
    const double dx = p[0] - nose_tip_mm[0];
    const double dy = p[1] - nose_tip_mm[1];
    const double dz = p[2] - nose_tip_mm[2];
    if (std::sqrt(dx * dx + dy * dy + dz * dz) < radius_mm) out.points.push_back(p);
  }
  if (out.points.empty()) throw DegenerateInputError("crop_sphere: no points inside the crop");
  return out;
}

double optimal_depth(double radius_mm, const Intrinsics& intr, std::int64_t out_width,
                     std::int64_t out_height) {
  return std::max(2.0 * radius_mm * intr.fx / static_cast<double>(out_width),
                  2.0 * radius_mm * intr.fy / static_cast<double>(out_height));
}

ProjectionResult recenter_and_project(const PointCloud& cloud, const Intrinsics& intr,
                                      double radius_mm, std::int64_t out_width,
                                      std::int64_t out_height) {
  if (cloud.points.empty()) throw DegenerateInputError("recenter_and_project: empty cloud");

  std::array<double, 3> centroid = {0.0, 0.0, 0.0};
  for (const auto& p : cloud.points) {
    centroid[0] += p[0];
    centroid[1] += p[1];
    centroid[2] += p[2];
  }
  const double inv_n = 1.0 / static_cast<double>(cloud.points.size());
  for (double& c : centroid) c *= inv_n;

  ProjectionResult result;
  result.z_opt = optimal_depth(radius_mm, intr, out_width, out_height);

  DepthImage& img = result.depth;
  img.width = out_width;
  img.height = out_height;
  img.intrinsics = {intr.fx, intr.fy, (static_cast<double>(out_width) - 1.0) / 2.0,
                    (static_cast<double>(out_height) - 1.0) / 2.0};
  img.depth_mm.assign(static_cast<std::size_t>(out_width * out_height), 0.0);
  std::vector<double> weight(img.depth_mm.size(), 0.0);

  // Splatting accumulates in point order; holes stay missing rather than
  // being filled with invented depth.
  for (const auto& p : cloud.points) {
    const double x = p[0] - centroid[0];
    const double y = p[1] - centroid[1];
    const double z = p[2] - centroid[2] + result.z_opt;
    if (z <= 0.0) continue;
    const double u = x * intr.fx / z + img.intrinsics.cx;
    const double v = y * intr.fy / z + img.intrinsics.cy;
    const auto u0 = static_cast<std::int64_t>(std::floor(u));
    const auto v0 = static_cast<std::int64_t>(std::floor(v));
    const double du = u - static_cast<double>(u0);
    const double dv = v - static_cast<double>(v0);
    const double w[4] = {(1.0 - du) * (1.0 - dv), du * (1.0 - dv), (1.0 - du) * dv, du * dv};
    const std::int64_t uu[4] = {u0, u0 + 1, u0, u0 + 1};
    const std::int64_t vv[4] = {v0, v0, v0 + 1, v0 + 1};
    for (int c = 0; c < 4; ++c) {
      if (uu[c] < 0 || uu[c] >= out_width || vv[c] < 0 || vv[c] >= out_height) continue;
      if (w[c] == 0.0) continue;
      const std::size_t idx = static_cast<std::size_t>(vv[c] * out_width + uu[c]);
      img.depth_mm[idx] += w[c] * z;
      weight[idx] += w[c];
    }
  }
  for (std::size_t i = 0; i < img.depth_mm.size(); ++i) {
    img.depth_mm[i] = weight[i] > 0.0 ? img.depth_mm[i] / weight[i] : 0.0;
  }
  return result;
}

void normalize_extent(std::span<double> values) {
  if (values.empty()) return;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) throw DegenerateInputError("normalize_extent: axis has zero extent");
  const double range = hi - lo;
  for (double& v : values) v = (2.0 * v - hi - lo) / range;
}

NormalizedFaceTensor normalize_tensor(const std::vector<std::uint8_t>& rgb,
                                      const DepthImage& projected) {
  const std::int64_t w = projected.width;
  const std::int64_t h = projected.height;
  if (static_cast<std::int64_t>(rgb.size()) != w * h * 3) {
    throw DimensionError("normalize_tensor: RGB raster size mismatch");
  }

  NormalizedFaceTensor out;
  out.width = w;
  out.height = h;
  out.values.assign(static_cast<std::size_t>(w * h * 6), 0.0);
  out.mask.assign(static_cast<std::size_t>(w * h), 0);

  // Back-project the interpolated depth map into the new point cloud whose
  // coordinates feed the geometry channels.
  std::vector<double> xs, ys, zs;
  std::vector<std::int64_t> pixel;
  for (std::int64_t v = 0; v < h; ++v) {
    for (std::int64_t u = 0; u < w; ++u) {
      const double z = projected.at(v, u);
      if (z <= 0.0) continue;
      xs.push_back((static_cast<double>(u) - projected.intrinsics.cx) * z / projected.intrinsics.fx);
      ys.push_back((static_cast<double>(v) - projected.intrinsics.cy) * z / projected.intrinsics.fy);
      zs.push_back(z);
      pixel.push_back(v * w + u);
    }
  }
  if (pixel.size() < 2) throw DegenerateInputError("normalize_tensor: fewer than two valid pixels");
  normalize_extent(xs);
  normalize_extent(ys);
  normalize_extent(zs);

  parallel_for(h * w, [&](std::int64_t i) {
    double* slot = out.values.data() + i * 6;
    const std::uint8_t* px = rgb.data() + i * 3;
    slot[0] = 2.0 * static_cast<double>(px[0]) / 255.0 - 1.0;
    slot[1] = 2.0 * static_cast<double>(px[1]) / 255.0 - 1.0;
    slot[2] = 2.0 * static_cast<double>(px[2]) / 255.0 - 1.0;
  });
  for (std::size_t p = 0; p < pixel.size(); ++p) {
    double* slot = out.values.data() + pixel[p] * 6;
    slot[3] = xs[p];
    slot[4] = ys[p];
    slot[5] = zs[p];
    out.mask[static_cast<std::size_t>(pixel[p])] = 1;
  }
  return out;
}

DepthImage load_depth_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());

  DepthImage img;
  std::string line;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "end_header") {
      header_done = true;
      break;
    }
    std::istringstream fields(line);
    std::string key, eq;
    double value = 0.0;
    if (!(fields >> key >> eq >> value) || eq != "=") {
      throw FormatError(path.string() + ": bad header line '" + line + "'");
    }
    if (key == "width") img.width = static_cast<std::int64_t>(value);
    else if (key == "height") img.height = static_cast<std::int64_t>(value);
    else if (key == "fx") img.intrinsics.fx = value;
    else if (key == "fy") img.intrinsics.fy = value;
    else if (key == "cx") img.intrinsics.cx = value;
    else if (key == "cy") img.intrinsics.cy = value;
    else throw FormatError(path.string() + ": unknown header key '" + key + "'");
  }
  if (!header_done) throw FormatError(path.string() + ": missing end_header");
  if (img.width <= 0 || img.height <= 0 || img.intrinsics.fx <= 0 || img.intrinsics.fy <= 0) {
    throw FormatError(path.string() + ": incomplete header");
  }

  std::vector<std::uint16_t> raw(static_cast<std::size_t>(img.width * img.height));
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(std::uint16_t)));
  if (!in) throw FormatError(path.string() + ": truncated raster");
  img.depth_mm.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) img.depth_mm[i] = static_cast<double>(raw[i]);
  return img;
}

void save_depth_raster(const DepthImage& depth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "width = " << depth.width << "\n";
  out << "height = " << depth.height << "\n";
  out << "fx = " << depth.intrinsics.fx << "\n";
  out << "fy = " << depth.intrinsics.fy << "\n";
  out << "cx = " << depth.intrinsics.cx << "\n";
  out << "cy = " << depth.intrinsics.cy << "\n";
  out << "end_header\n";
  std::vector<std::uint16_t> raw(depth.depth_mm.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(depth.depth_mm[i], 0.0, 65535.0);
    raw[i] = static_cast<std::uint16_t>(std::llround(v));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint16_t)));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::uint8_t> load_rgb_raster(const std::filesystem::path& path, std::int64_t width,
                                          std::int64_t height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width * height * 3));
  in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!in || in.peek() != std::ifstream::traits_type::eof()) {
    throw FormatError(path.string() + ": expected exactly " + std::to_string(rgb.size()) +
                      " bytes of RGB triplets");
  }
  return rgb;
}

}  // namespace attrloss
