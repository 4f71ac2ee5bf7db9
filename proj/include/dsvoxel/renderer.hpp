// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "dsvoxel/camera.hpp"
#include "dsvoxel/random.hpp"
#include "dsvoxel/voxel_field.hpp"

namespace dsvoxel {

/// Quadrature nodes along one ray. t is strictly increasing inside
/// [t_near, t_far]; delta[k] = t[k+1] - t[k] except the last entry, which
/// duplicates the final spacing (the opaque-wall sample has no successor).
struct RaySamples {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::Zero();
  std::vector<double> t;
  std::vector<double> delta;

  std::size_t size() const { return t.size(); }
  Vec3 point(std::size_t k) const { return origin + t[k] * direction; }
};

/// One uniformly-jittered sample per bin of [t_near, t_far]. K >= 2.
RaySamples stratified_samples(const Ray& ray, int k, Rng& rng);

/// Deterministic bin-center samples; the quadrature oracle mode. K >= 2.
RaySamples midpoint_samples(const Ray& ray, int k);

/// Unchecked variant for analytic quadrature tests (allows t_near = 0).
RaySamples midpoint_samples(const Vec3& origin, const Vec3& direction, double t_near,
                            double t_far, int k);

/// Everything one ray produces: composited color, the discrete termination
/// distribution h over samples, transmittances, depth moments, and the cached
/// field samples needed to run the adjoint pass.
struct RayRender {
  Vec3 color = Vec3::Zero();
  std::vector<double> h;
  std::vector<double> trans;
  double depth_mean = 0.0;
  double depth_var = 0.0;
  RaySamples samples;
  std::vector<FieldSample> field_samples;
  const VoxelField* field = nullptr;
};

/// Discrete quadrature of the rendering integral with the far bound treated
/// as an opaque wall (alpha = 1 at the last sample), which makes h a proper
/// probability distribution: sum_k h_k = 1.
RayRender render_ray(const VoxelField& field, const RaySamples& samples);

/// Adjoint of render_ray. Pulls cotangents of the outputs (d_color, d_depth
/// on depth_mean, d_h elementwise on the termination weights) back into raw
/// field-parameter gradients. Pass an empty d_h to skip that term.
void render_ray_backward(const RayRender& render, const Vec3& d_color, double d_depth,
                         const std::vector<double>& d_h, FieldGradients& grads);

struct VarianceStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double q10 = 0.0;
  double median = 0.0;
  double q90 = 0.0;
};

/// Summary of the termination-depth variance across a batch of rays.
VarianceStats termination_variance_stats(const std::vector<RayRender>& renders);

/// exp arguments are clamped below at -80 so deep occlusion cannot underflow
/// transmittance into NaN territory. Gradients are exactly those of the
/// clamped forward pass.
inline constexpr double kMaxOpticalDepth = 80.0;

namespace detail {

/// Adjoint loop shared by the dense-accumulator path and the trainer's
/// per-ray buffers. emit(sample_index, d_sigma, d_rgb) receives the cotangent
/// of each sample's field outputs, walking samples back to front.
///
/// With a_i = sigma_i * delta_i the couplings are
///   d h_i / d a_i = T_{i+1},   d h_j / d a_i = -h_j  (j > i),
/// and the wall sample has no sigma dependence; a reverse suffix sum over
/// g_j h_j evaluates the second term in O(K).
template <typename EmitFn>
void ray_backward(const RayRender& render, const Vec3& d_color, double d_depth,
                  const std::vector<double>& d_h, EmitFn&& emit) {
  const std::size_t k = render.h.size();
  double suffix = 0.0;  // sum over j > i of g_j h_j
  for (std::size_t ii = k; ii-- > 0;) {
    const FieldSample& fs = render.field_samples[ii];
    double g = d_color.dot(fs.rgb) + d_depth * render.samples.t[ii];
    if (!d_h.empty()) g += d_h[ii];
    const Vec3 d_rgb = render.h[ii] * d_color;
    double d_sigma = 0.0;
    if (ii + 1 < k) {
      const double a = fs.sigma * render.samples.delta[ii];
      if (a < kMaxOpticalDepth) {
        const double trans_next = render.trans[ii] * std::exp(-a);
        d_sigma = (g * trans_next - suffix) * render.samples.delta[ii];
      }
      // Past the clamp the forward value is constant in sigma: gradient 0.
    }
    suffix += g * render.h[ii];
    if (fs.handle.count != 0) {
      emit(ii, d_sigma, d_rgb);
    }
  }
}

}  // namespace detail

}  // namespace dsvoxel
