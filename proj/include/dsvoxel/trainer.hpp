// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsvoxel/dataset.hpp"
#include "dsvoxel/losses.hpp"
#include "dsvoxel/metrics.hpp"
#include "dsvoxel/renderer.hpp"

namespace dsvoxel {

struct TrainConfig {
  double lambda_depth = 0.1;
  DepthMode depth_mode = DepthMode::kNone;
  bool dense_depth = false;  // per-pixel KL targets from the train depth maps
  int samples_per_ray = 128;
  int rays_per_batch = 512;
  double keypoint_ray_fraction = 0.5;
  int iters = 5000;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int eval_every = 250;
  double near = 0.0;  // 0: use dataset bounds
  double far = 0.0;
  int grid_resolution = 64;

  void validate() const;
};

TrainConfig train_config_from_json_file(const std::string& path);
void write_train_config_json(const TrainConfig& cfg, const std::string& path);

/// First/second moment buffers for one parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update, elementwise over params.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps);

/// One training ray: where to march, what color to match, and optionally
/// which depth to respect.
struct TrainRay {
  Ray ray;
  Vec3 rgb_target = Vec3::Zero();
  std::optional<DepthTarget> depth;
};

/// Mixed batch: floor(fraction * B) keypoint rays (through the stored
/// sub-pixel coordinates, RGB target interpolated bilinearly, depth target
/// attached), remainder through uniformly drawn pixel centers. With dense
/// supervision enabled every pixel ray carries a depth target instead.
std::vector<TrainRay> sample_ray_batch(const SceneDataset& dataset, const TrainConfig& cfg,
                                       Rng& rng);

struct EvalRow {
  int iter = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double depth_err_pct = 0.0;
  double mean_term_var = 0.0;

  bool operator==(const EvalRow&) const = default;
};

struct TrainResult {
  VoxelField field;
  std::vector<EvalRow> history;        // rows at eval_every multiples and the final iter
  std::vector<LossReport> loss_curve;  // one report per iteration
};

using CheckpointSink = std::function<void(int iter, const VoxelField& field)>;

/// Full optimization loop: sample batch, render, loss, adjoint, Adam.
/// Deterministic per seed. Aborts with NumericalError on a non-finite loss.
TrainResult train(const SceneDataset& dataset, const TrainConfig& cfg,
                  const CheckpointSink& checkpoint_sink = nullptr);

/// Identical loop with the depth-supervision branch not instantiated; only
/// valid for depth_mode none. Exists so tests can prove that disabling depth
/// supervision reproduces plain color-only training bit for bit.
TrainResult train_color_only(const SceneDataset& dataset, const TrainConfig& cfg);

/// Deterministic midpoint-quadrature render of a full view.
void render_view(const VoxelField& field, const Camera& camera, int samples_per_ray,
                 double near, double far, Image& image, DepthMap& depth,
                 DepthMap* term_variance = nullptr);

/// Scale/shift between keypoint depths and the oracle reference depths of
/// their train views; identity when fewer than 2 usable pairs exist.
AlignParams fit_keypoint_alignment(const SceneDataset& dataset);

/// Test-view metrics of a trained field (mean PSNR/SSIM over views, pooled
/// aligned depth error, mean termination variance).
EvalRow evaluate_field(const VoxelField& field, const SceneDataset& dataset,
                       const TrainConfig& cfg, const AlignParams& align, int iter);

}  // namespace dsvoxel
