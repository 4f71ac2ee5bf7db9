// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "dsvoxel/renderer.hpp"

namespace dsvoxel {

/// Depth supervision record for one ray: estimated surface depth and the
/// standard deviation of its uncertainty, both in world units.
struct DepthTarget {
  double depth = 0.0;
  double sigma_hat = 0.0;
};

enum class DepthMode { kNone, kKl, kMse };

DepthMode depth_mode_from_string(const std::string& name);  // none|kl|mse
std::string to_string(DepthMode mode);

/// Floor inside the log so zero-mass bins keep a finite loss and gradient.
inline constexpr double kLogEps = 1e-10;

/// Mean squared RGB reconstruction error over a batch of rays, plus the
/// per-ray color cotangents.
struct ColorLoss {
  double value = 0.0;
  std::vector<Vec3> d_color;
};
ColorLoss color_loss(const std::vector<RayRender>& renders, const std::vector<Vec3>& targets);

/// Gaussian-weighted cross entropy of the termination distribution against a
/// depth target:
///   loss = -sum_k exp(-(t_k - D)^2 / (2 sigma^2)) * log(h_k + eps) * delta_k.
/// Minimizing it concentrates termination mass in the bins around D. Returns
/// the per-sample cotangents d loss / d h_k.
struct KlLoss {
  double value = 0.0;
  std::vector<double> d_h;
};
KlLoss depth_kl_loss(const RayRender& render, const DepthTarget& target);

/// Squared error between expected termination depth and the target depth.
/// sigma_hat is unused; this is the ablation baseline.
struct MseLoss {
  double value = 0.0;
  double d_depth = 0.0;
};
MseLoss depth_mse_loss(const RayRender& render, const DepthTarget& target);

struct LossReport {
  double color_loss = 0.0;
  double depth_loss = 0.0;
  double total = 0.0;
  std::size_t rgb_ray_count = 0;
  std::size_t keypoint_ray_count = 0;
};

/// Combines the per-part means into the training objective
/// total = color + lambda_depth * depth. Mode none reports depth as 0.
LossReport total_loss(double color_part, std::size_t rgb_rays, double depth_part,
                      std::size_t keypoint_rays, double lambda_depth, DepthMode mode);

}  // namespace dsvoxel
