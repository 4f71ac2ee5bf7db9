// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsvoxel/types.hpp"

namespace dsvoxel {

/// Row-major RGB image with double channels in [0, 1]. The sample stored at
/// pixel (i, j) sits at continuous coordinates (i + 0.5, j + 0.5).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // 3 per pixel

  static Image zeros(int w, int h) { return Image{w, h, std::vector<double>(3u * w * h, 0.0)}; }

  Vec3 pixel(int i, int j) const {
    const std::size_t at = 3u * (static_cast<std::size_t>(j) * width + i);
    return Vec3(data[at], data[at + 1], data[at + 2]);
  }
  void set_pixel(int i, int j, const Vec3& rgb) {
    const std::size_t at = 3u * (static_cast<std::size_t>(j) * width + i);
    data[at] = rgb[0];
    data[at + 1] = rgb[1];
    data[at + 2] = rgb[2];
  }

  /// Snaps every channel to the 8-bit grid used by the PPM files, so that
  /// in-memory pixels equal what a write/read round trip would produce.
  void quantize_to_8bit();
};

/// Bilinear interpolation at continuous image coordinates; border clamped.
Vec3 bilinear_sample(const Image& img, double u, double v);

/// Row-major depth map in world units; 0 means "no depth here". Stored as
/// f32 to match the on-disk format exactly.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  static DepthMap zeros(int w, int h) {
    return DepthMap{w, h, std::vector<float>(static_cast<std::size_t>(w) * h, 0.0f)};
  }
  float at(int i, int j) const { return data[static_cast<std::size_t>(j) * width + i]; }
  void set(int i, int j, float d) { data[static_cast<std::size_t>(j) * width + i] = d; }
};

double bilinear_sample_depth(const DepthMap& map, double u, double v);

// Binary PPM (P6, maxval 255).
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Raw depth file: magic "DSDM", u32 width, u32 height, little-endian f32
// row-major samples.
void write_depth_map(const std::string& path, const DepthMap& map);
DepthMap read_depth_map(const std::string& path);

}  // namespace dsvoxel
