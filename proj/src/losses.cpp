// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/losses.hpp"

#include <cmath>

#include "dsvoxel/errors.hpp"
#include "dsvoxel/parallel.hpp"

namespace dsvoxel {

DepthMode depth_mode_from_string(const std::string& name) {
  if (name == "none") return DepthMode::kNone;
  if (name == "kl") return DepthMode::kKl;
  if (name == "mse") return DepthMode::kMse;
  throw ArgumentError("unknown depth mode '" + name + "' (expected none|kl|mse)");
}

std::string to_string(DepthMode mode) {
  switch (mode) {
    case DepthMode::kNone: return "none";
    case DepthMode::kKl: return "kl";
    case DepthMode::kMse: return "mse";
  }
  return "?";
}

ColorLoss color_loss(const std::vector<RayRender>& renders, const std::vector<Vec3>& targets) {
  if (renders.empty()) throw ArgumentError("color_loss: empty batch");
  if (renders.size() != targets.size()) {
    throw ContractError("color_loss: batch size mismatch");
  }
  const std::size_t n = renders.size();
  std::vector<double> per_ray(n);
  ColorLoss out;
  out.d_color.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 diff = renders[i].color - targets[i];
    per_ray[i] = diff.squaredNorm();
    out.d_color[i] = 2.0 * inv_n * diff;
  }
  out.value = pairwise_sum(per_ray.data(), n) * inv_n;
  return out;
}

KlLoss depth_kl_loss(const RayRender& render, const DepthTarget& target) {
  if (!(target.depth > 0.0) || !(target.sigma_hat > 0.0)) {
    throw ArgumentError("depth_kl_loss: target depth and sigma_hat must be positive");
  }
  const std::size_t k = render.h.size();
  double mass = 0.0;
  for (double h : render.h) mass += h;
  if (std::abs(mass - 1.0) > 1e-9) {
    throw ContractError("depth_kl_loss: termination weights do not sum to 1");
  }

  KlLoss out;
  out.d_h.resize(k);
  const double inv_two_var = 1.0 / (2.0 * target.sigma_hat * target.sigma_hat);
  double loss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dt = render.samples.t[i] - target.depth;
    const double w = std::exp(-dt * dt * inv_two_var);
    const double delta = render.samples.delta[i];
    loss -= w * std::log(render.h[i] + kLogEps) * delta;
    out.d_h[i] = -w * delta / (render.h[i] + kLogEps);
  }
  out.value = loss;
  return out;
}

MseLoss depth_mse_loss(const RayRender& render, const DepthTarget& target) {
  if (!(target.depth > 0.0)) {
    throw ArgumentError("depth_mse_loss: target depth must be positive");
  }
  MseLoss out;
  const double diff = render.depth_mean - target.depth;
  out.value = diff * diff;
  out.d_depth = 2.0 * diff;
  return out;
}

LossReport total_loss(double color_part, std::size_t rgb_rays, double depth_part,
                      std::size_t keypoint_rays, double lambda_depth, DepthMode mode) {
  if (lambda_depth < 0.0) throw ArgumentError("total_loss: lambda_depth must be >= 0");
  LossReport report;
  report.color_loss = color_part;
  report.depth_loss = mode == DepthMode::kNone ? 0.0 : depth_part;
  report.total = report.color_loss + lambda_depth * report.depth_loss;
  report.rgb_ray_count = rgb_rays;
  report.keypoint_ray_count = keypoint_rays;
  return report;
}

}  // namespace dsvoxel
