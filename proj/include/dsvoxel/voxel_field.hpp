// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dsvoxel/types.hpp"

namespace dsvoxel {

/// Activation helpers. Density uses softplus so cells never die at
/// initialization; color uses the logistic to stay in (0,1).
double softplus(double x);
double softplus_derivative(double x);  // = logistic(x)
double logistic(double x);

/// Indices and weights of the 8 lattice nodes contributing to one sample,
/// together with the activation derivatives at the interpolated raw values.
/// count == 0 marks an out-of-grid sample that carries no gradient.
struct GradHandle {
  std::array<std::uint32_t, 8> node = {};
  std::array<double, 8> weight = {};
  double d_sigma_d_raw = 0.0;               // softplus'(raw_sigma at the sample)
  std::array<double, 3> d_rgb_d_raw = {};   // logistic'(raw_rgb at the sample)
  std::uint8_t count = 0;
};

struct FieldSample {
  double sigma = 0.0;
  Vec3 rgb = Vec3(0.5, 0.5, 0.5);
  GradHandle handle;
};

/// Dense trainable grid of raw density and color parameters. Values live on
/// lattice nodes spanning the bounding box; queries interpolate the raw
/// parameters trilinearly and then activate. Outside the box the field is
/// exactly empty (sigma = 0, mid-gray color, no gradient).
class VoxelField {
 public:
  VoxelField(int gx, int gy, int gz, const Vec3& bbox_min, const Vec3& bbox_max);

  int gx() const { return gx_; }
  int gy() const { return gy_; }
  int gz() const { return gz_; }
  std::size_t node_count() const { return raw_sigma_.size(); }
  const Vec3& bbox_min() const { return bbox_min_; }
  const Vec3& bbox_max() const { return bbox_max_; }

  std::vector<double>& raw_sigma() { return raw_sigma_; }
  const std::vector<double>& raw_sigma() const { return raw_sigma_; }
  std::vector<double>& raw_rgb() { return raw_rgb_; }  // 3 per node, node-major
  const std::vector<double>& raw_rgb() const { return raw_rgb_; }

  std::size_t node_index(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) +
           static_cast<std::size_t>(gx_) *
               (static_cast<std::size_t>(iy) + static_cast<std::size_t>(gy_) * iz);
  }

  Vec3 node_position(int ix, int iy, int iz) const;

  FieldSample sample(const Vec3& point) const;

  void save(const std::string& path) const;
  static VoxelField load(const std::string& path);

 private:
  int gx_, gy_, gz_;
  Vec3 bbox_min_, bbox_max_;
  std::vector<double> raw_sigma_;
  std::vector<double> raw_rgb_;
};

/// Per-parameter gradient accumulator bound to one field.
struct FieldGradients {
  explicit FieldGradients(const VoxelField& field);

  const VoxelField* field;
  std::vector<double> d_raw_sigma;
  std::vector<double> d_raw_rgb;

  void clear();
  void add(const FieldGradients& other);  // fixed-order merge of worker buffers
};

/// Chain rule from a sample cotangent into the 8 contributing raw parameters.
/// Throws ContractError if the handle does not belong to grads.field.
void accumulate_field_grad(FieldGradients& grads, const GradHandle& handle, double d_sigma,
                           const Vec3& d_rgb);

/// Expansion of the same chain rule for entry-buffer consumers:
/// add(node_index, d_raw_sigma, d_raw_rgb) per contributing node.
template <typename AddFn>
void expand_field_grad(const GradHandle& h, double d_sigma, const Vec3& d_rgb, AddFn&& add) {
  for (int i = 0; i < h.count; ++i) {
    const double w = h.weight[i];
    add(h.node[i], w * h.d_sigma_d_raw * d_sigma,
        Vec3(w * h.d_rgb_d_raw[0] * d_rgb[0], w * h.d_rgb_d_raw[1] * d_rgb[1],
             w * h.d_rgb_d_raw[2] * d_rgb[2]));
  }
}

}  // namespace dsvoxel
