// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "dsvoxel/errors.hpp"

namespace dsvoxel {

namespace {

double clamped_exp_neg(double a) { return std::exp(-std::min(a, kMaxOpticalDepth)); }

RaySamples finalize(const Vec3& origin, const Vec3& direction, std::vector<double> t) {
  RaySamples s;
  s.origin = origin;
  s.direction = direction;
  s.t = std::move(t);
  const std::size_t k = s.t.size();
  s.delta.resize(k);
  for (std::size_t i = 0; i + 1 < k; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
  if (k >= 2) s.delta[k - 1] = s.t[k - 1] - s.t[k - 2];
  return s;
}

}  // namespace

RaySamples stratified_samples(const Ray& ray, int k, Rng& rng) {
  if (k < 2) throw ArgumentError("stratified_samples: need at least 2 samples");
  const double span = ray.t_far - ray.t_near;
  std::vector<double> t(k);
  for (int i = 0; i < k; ++i) {
    t[i] = ray.t_near + span * (i + rng.uniform()) / k;
  }
  return finalize(ray.origin, ray.direction, std::move(t));
}

RaySamples midpoint_samples(const Vec3& origin, const Vec3& direction, double t_near,
                            double t_far, int k) {
  if (k < 2) throw ArgumentError("midpoint_samples: need at least 2 samples");
  if (!(t_near >= 0.0 && t_near < t_far)) {
    throw ArgumentError("midpoint_samples: require 0 <= t_near < t_far");
  }
  const double span = t_far - t_near;
  std::vector<double> t(k);
  for (int i = 0; i < k; ++i) {
    t[i] = t_near + span * (i + 0.5) / k;
  }
  return finalize(origin, direction, std::move(t));
}

RaySamples midpoint_samples(const Ray& ray, int k) {
  return midpoint_samples(ray.origin, ray.direction, ray.t_near, ray.t_far, k);
}

RayRender render_ray(const VoxelField& field, const RaySamples& samples) {
  const std::size_t k = samples.size();
  if (k == 0) throw ArgumentError("render_ray: empty sample set");

  RayRender out;
  out.samples = samples;
  out.field = &field;
  out.h.resize(k);
  out.trans.resize(k);
  out.field_samples.resize(k);

  double optical_depth = 0.0;  // running sum of sigma_j * delta_j
  Vec3 color = Vec3::Zero();
  double depth_mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const FieldSample fs = field.sample(samples.point(i));
    out.field_samples[i] = fs;
    const double trans = clamped_exp_neg(optical_depth);
    out.trans[i] = trans;
    double alpha;
    if (i + 1 < k) {
      alpha = 1.0 - clamped_exp_neg(fs.sigma * samples.delta[i]);
      optical_depth += fs.sigma * samples.delta[i];
    } else {
      alpha = 1.0;  // opaque wall at the far bound
    }
    const double h = trans * alpha;
    out.h[i] = h;
    color += h * fs.rgb;
    depth_mean += h * samples.t[i];
  }
  out.color = color;
  out.depth_mean = depth_mean;

  // Second central moment; computed around the mean for stability.
  double var = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = samples.t[i] - depth_mean;
    var += out.h[i] * d * d;
  }
  out.depth_var = var;
  return out;
}

void render_ray_backward(const RayRender& render, const Vec3& d_color, double d_depth,
                         const std::vector<double>& d_h, FieldGradients& grads) {
  if (render.field != grads.field) {
    throw ContractError("render_ray_backward: render produced from a different field");
  }
  if (!d_h.empty() && d_h.size() != render.h.size()) {
    throw ContractError("render_ray_backward: d_h length does not match sample count");
  }
  detail::ray_backward(render, d_color, d_depth, d_h,
                       [&](std::size_t i, double d_sigma, const Vec3& d_rgb) {
                         accumulate_field_grad(grads, render.field_samples[i].handle, d_sigma,
                                               d_rgb);
                       });
}

VarianceStats termination_variance_stats(const std::vector<RayRender>& renders) {
  if (renders.empty()) {
    throw ArgumentError("termination_variance_stats: empty render collection");
  }
  std::vector<double> vars;
  vars.reserve(renders.size());
  for (const auto& r : renders) vars.push_back(r.depth_var);
  std::sort(vars.begin(), vars.end());

  auto quantile = [&vars](double q) {
    const double pos = q * static_cast<double>(vars.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, vars.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return vars[lo] * (1.0 - f) + vars[hi] * f;
  };

  VarianceStats s;
  double sum = 0.0;
  for (double v : vars) sum += v;
  s.mean = sum / static_cast<double>(vars.size());
  s.min = vars.front();
  s.max = vars.back();
  s.q10 = quantile(0.10);
  s.median = quantile(0.50);
  s.q90 = quantile(0.90);
  return s;
}

}  // namespace dsvoxel
