// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/voxel_field.hpp"

#include <cmath>

#include "dsvoxel/binary_io.hpp"
#include "dsvoxel/errors.hpp"

namespace dsvoxel {

namespace {
constexpr double kInitRawSigma = -2.0;  // sigma ~= 0.127, near-transparent start
constexpr double kInitRawRgb = 0.0;     // mid-gray
constexpr char kMagic[4] = {'D', 'S', 'V', 'F'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus_derivative(double x) { return logistic(x); }

VoxelField::VoxelField(int gx, int gy, int gz, const Vec3& bbox_min, const Vec3& bbox_max)
    : gx_(gx), gy_(gy), gz_(gz), bbox_min_(bbox_min), bbox_max_(bbox_max) {
  if (gx < 2 || gy < 2 || gz < 2) {
    throw ArgumentError("voxel grid needs at least 2 nodes per axis");
  }
  if (!(bbox_min.x() < bbox_max.x() && bbox_min.y() < bbox_max.y() &&
        bbox_min.z() < bbox_max.z())) {
    throw ArgumentError("voxel grid bbox_min must be componentwise below bbox_max");
  }
  const std::size_t n =
      static_cast<std::size_t>(gx) * static_cast<std::size_t>(gy) * static_cast<std::size_t>(gz);
  raw_sigma_.assign(n, kInitRawSigma);
  raw_rgb_.assign(n * 3, kInitRawRgb);
}

Vec3 VoxelField::node_position(int ix, int iy, int iz) const {
  const Vec3 extent = bbox_max_ - bbox_min_;
  return bbox_min_ + Vec3(extent.x() * ix / (gx_ - 1), extent.y() * iy / (gy_ - 1),
                          extent.z() * iz / (gz_ - 1));
}

FieldSample VoxelField::sample(const Vec3& p) const {
  FieldSample out;
  if (p.x() < bbox_min_.x() || p.y() < bbox_min_.y() || p.z() < bbox_min_.z() ||
      p.x() > bbox_max_.x() || p.y() > bbox_max_.y() || p.z() > bbox_max_.z()) {
    // Empty space outside the grid: fully transparent, no gradient.
    out.sigma = 0.0;
    out.rgb = Vec3(0.5, 0.5, 0.5);
    return out;
  }

  const Vec3 extent = bbox_max_ - bbox_min_;
  const double sx = (p.x() - bbox_min_.x()) / extent.x() * (gx_ - 1);
  const double sy = (p.y() - bbox_min_.y()) / extent.y() * (gy_ - 1);
  const double sz = (p.z() - bbox_min_.z()) / extent.z() * (gz_ - 1);

  auto cell = [](double s, int g) {
    int i = static_cast<int>(s);
    if (i > g - 2) i = g - 2;
    if (i < 0) i = 0;
    return i;
  };
  const int ix = cell(sx, gx_), iy = cell(sy, gy_), iz = cell(sz, gz_);
  const double fx = sx - ix, fy = sy - iy, fz = sz - iz;

  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  const double wz[2] = {1.0 - fz, fz};

  GradHandle& h = out.handle;
  h.count = 8;
  double raw_s = 0.0;
  double raw_c[3] = {0.0, 0.0, 0.0};
  int slot = 0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx, ++slot) {
        const std::size_t idx = node_index(ix + dx, iy + dy, iz + dz);
        const double w = wx[dx] * wy[dy] * wz[dz];
        h.node[slot] = static_cast<std::uint32_t>(idx);
        h.weight[slot] = w;
        raw_s += w * raw_sigma_[idx];
        const double* c = &raw_rgb_[idx * 3];
        raw_c[0] += w * c[0];
        raw_c[1] += w * c[1];
        raw_c[2] += w * c[2];
      }
    }
  }

  out.sigma = softplus(raw_s);
  h.d_sigma_d_raw = softplus_derivative(raw_s);
  for (int c = 0; c < 3; ++c) {
    const double a = logistic(raw_c[c]);
    out.rgb[c] = a;
    h.d_rgb_d_raw[c] = a * (1.0 - a);
  }
  return out;
}

void VoxelField::save(const std::string& path) const {
  BinaryWriter w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(gx_));
  w.u32(static_cast<std::uint32_t>(gy_));
  w.u32(static_cast<std::uint32_t>(gz_));
  for (int i = 0; i < 3; ++i) w.f64(bbox_min_[i]);
  for (int i = 0; i < 3; ++i) w.f64(bbox_max_[i]);
  for (double v : raw_sigma_) w.f32(static_cast<float>(v));
  for (double v : raw_rgb_) w.f32(static_cast<float>(v));
  write_file_bytes(path, w.data());
}

VoxelField VoxelField::load(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  BinaryReader r(bytes, path);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError(path + ": not a DSVF checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw ParseError(path + ": unsupported DSVF version " + std::to_string(version));
  }
  const int gx = static_cast<int>(r.u32());
  const int gy = static_cast<int>(r.u32());
  const int gz = static_cast<int>(r.u32());
  Vec3 lo, hi;
  for (int i = 0; i < 3; ++i) lo[i] = r.f64();
  for (int i = 0; i < 3; ++i) hi[i] = r.f64();
  VoxelField field(gx, gy, gz, lo, hi);
  for (double& v : field.raw_sigma_) v = r.f32();
  for (double& v : field.raw_rgb_) v = r.f32();
  r.expect_end();
  return field;
}

FieldGradients::FieldGradients(const VoxelField& f)
    : field(&f), d_raw_sigma(f.node_count(), 0.0), d_raw_rgb(f.node_count() * 3, 0.0) {}

void FieldGradients::clear() {
  std::fill(d_raw_sigma.begin(), d_raw_sigma.end(), 0.0);
  std::fill(d_raw_rgb.begin(), d_raw_rgb.end(), 0.0);
}

void FieldGradients::add(const FieldGradients& other) {
  if (other.field != field) throw ContractError("merging gradients of different fields");
  for (std::size_t i = 0; i < d_raw_sigma.size(); ++i) d_raw_sigma[i] += other.d_raw_sigma[i];
  for (std::size_t i = 0; i < d_raw_rgb.size(); ++i) d_raw_rgb[i] += other.d_raw_rgb[i];
}

void accumulate_field_grad(FieldGradients& grads, const GradHandle& handle, double d_sigma,
                           const Vec3& d_rgb) {
  const std::size_t n = grads.d_raw_sigma.size();
  expand_field_grad(handle, d_sigma, d_rgb,
                    [&](std::uint32_t node, double ds, const Vec3& dc) {
                      if (node >= n) {
                        throw ContractError("gradient handle does not belong to this field");
                      }
                      grads.d_raw_sigma[node] += ds;
                      double* g = &grads.d_raw_rgb[node * 3];
                      g[0] += dc[0];
                      g[1] += dc[1];
                      g[2] += dc[2];
                    });
}

}  // namespace dsvoxel
