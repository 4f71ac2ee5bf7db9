// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/image.hpp"

#include <algorithm>
#include <cmath>

#include "dsvoxel/binary_io.hpp"
#include "dsvoxel/errors.hpp"

namespace dsvoxel {

namespace {

std::uint8_t to_byte(double c) {
  const double v = std::round(std::clamp(c, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(v);
}

}  // namespace

void Image::quantize_to_8bit() {
  for (double& c : data) c = to_byte(c) / 255.0;
}

Vec3 bilinear_sample(const Image& img, double u, double v) {
  const double s = u - 0.5;
  const double t = v - 0.5;
  int i0 = static_cast<int>(std::floor(s));
  int j0 = static_cast<int>(std::floor(t));
  i0 = std::clamp(i0, 0, img.width - 2);
  j0 = std::clamp(j0, 0, img.height - 2);
  const double fu = std::clamp(s - i0, 0.0, 1.0);
  const double fv = std::clamp(t - j0, 0.0, 1.0);
  return (1 - fu) * (1 - fv) * img.pixel(i0, j0) + fu * (1 - fv) * img.pixel(i0 + 1, j0) +
         (1 - fu) * fv * img.pixel(i0, j0 + 1) + fu * fv * img.pixel(i0 + 1, j0 + 1);
}

double bilinear_sample_depth(const DepthMap& map, double u, double v) {
  const double s = u - 0.5;
  const double t = v - 0.5;
  int i0 = static_cast<int>(std::floor(s));
  int j0 = static_cast<int>(std::floor(t));
  i0 = std::clamp(i0, 0, map.width - 2);
  j0 = std::clamp(j0, 0, map.height - 2);
  const double fu = std::clamp(s - i0, 0.0, 1.0);
  const double fv = std::clamp(t - j0, 0.0, 1.0);
  return (1 - fu) * (1 - fv) * map.at(i0, j0) + fu * (1 - fv) * map.at(i0 + 1, j0) +
         (1 - fu) * fv * map.at(i0, j0 + 1) + fu * fv * map.at(i0 + 1, j0 + 1);
}

void write_ppm(const std::string& path, const Image& img) {
  BinaryWriter w;
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  w.bytes(header.data(), header.size());
  for (double c : img.data) w.u8(to_byte(c));
  write_file_bytes(path, w.data());
}

Image read_ppm(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {  // comment line
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(bytes[pos++]);
    return t;
  };
  if (token() != "P6") throw ParseError(path + ": not a binary PPM (P6)");
  const int w = std::stoi(token());
  const int h = std::stoi(token());
  const int maxval = std::stoi(token());
  if (w <= 0 || h <= 0 || maxval != 255) throw ParseError(path + ": unsupported PPM header");
  ++pos;  // single whitespace after maxval
  const std::size_t need = 3u * static_cast<std::size_t>(w) * h;
  if (bytes.size() - pos < need) throw ParseError(path + ": truncated pixel data");
  Image img = Image::zeros(w, h);
  for (std::size_t i = 0; i < need; ++i) img.data[i] = bytes[pos + i] / 255.0;
  return img;
}

void write_depth_map(const std::string& path, const DepthMap& map) {
  BinaryWriter w;
  w.bytes("DSDM", 4);
  w.u32(static_cast<std::uint32_t>(map.width));
  w.u32(static_cast<std::uint32_t>(map.height));
  for (float d : map.data) w.f32(d);
  write_file_bytes(path, w.data());
}

DepthMap read_depth_map(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  BinaryReader r(bytes, path);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::string_view(magic, 4) != "DSDM") throw ParseError(path + ": not a DSDM depth map");
  const int w = static_cast<int>(r.u32());
  const int h = static_cast<int>(r.u32());
  if (w <= 0 || h <= 0) throw ParseError(path + ": bad depth map size");
  DepthMap map = DepthMap::zeros(w, h);
  for (float& d : map.data) d = r.f32();
  r.expect_end();
  return map;
}

}  // namespace dsvoxel
