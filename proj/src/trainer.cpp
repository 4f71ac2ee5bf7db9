// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "dsvoxel/errors.hpp"
#include "dsvoxel/parallel.hpp"

namespace dsvoxel {

void TrainConfig::validate() const {
  if (lambda_depth < 0.0) throw ArgumentError("config: lambda_depth must be >= 0");
  if (samples_per_ray < 2) throw ArgumentError("config: samples_per_ray must be >= 2");
  if (rays_per_batch < 1) throw ArgumentError("config: rays_per_batch must be >= 1");
  if (!(keypoint_ray_fraction >= 0.0 && keypoint_ray_fraction <= 1.0)) {
    throw ArgumentError("config: keypoint_ray_fraction must be in [0, 1]");
  }
  if (iters < 0) throw ArgumentError("config: iters must be >= 0");
  if (!(lr > 0.0)) throw ArgumentError("config: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ArgumentError("config: adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ArgumentError("config: adam_eps must be positive");
  if (eval_every < 1) throw ArgumentError("config: eval_every must be >= 1");
  if (grid_resolution < 2) throw ArgumentError("config: grid_resolution must be >= 2");
  if (near != 0.0 || far != 0.0) {
    if (!(near > 0.0 && near < far)) throw ArgumentError("config: require 0 < near < far");
  }
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json config_to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["lambda_depth"] = cfg.lambda_depth;
  j["depth_mode"] = to_string(cfg.depth_mode);
  j["dense_depth"] = cfg.dense_depth;
  j["samples_per_ray"] = cfg.samples_per_ray;
  j["rays_per_batch"] = cfg.rays_per_batch;
  j["keypoint_ray_fraction"] = cfg.keypoint_ray_fraction;
  j["iters"] = cfg.iters;
  j["lr"] = cfg.lr;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["seed"] = cfg.seed;
  j["eval_every"] = cfg.eval_every;
  j["near"] = cfg.near;
  j["far"] = cfg.far;
  j["grid_resolution"] = cfg.grid_resolution;
  return j;
}

}  // namespace

TrainConfig train_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  TrainConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "lambda_depth") cfg.lambda_depth = value.get<double>();
      else if (key == "depth_mode") cfg.depth_mode = depth_mode_from_string(value.get<std::string>());
      else if (key == "dense_depth") cfg.dense_depth = value.get<bool>();
      else if (key == "samples_per_ray") cfg.samples_per_ray = value.get<int>();
      else if (key == "rays_per_batch") cfg.rays_per_batch = value.get<int>();
      else if (key == "keypoint_ray_fraction") cfg.keypoint_ray_fraction = value.get<double>();
      else if (key == "iters") cfg.iters = value.get<int>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "beta1") cfg.beta1 = value.get<double>();
      else if (key == "beta2") cfg.beta2 = value.get<double>();
      else if (key == "adam_eps") cfg.adam_eps = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "eval_every") cfg.eval_every = value.get<int>();
      else if (key == "near") cfg.near = value.get<double>();
      else if (key == "far") cfg.far = value.get<double>();
      else if (key == "grid_resolution") cfg.grid_resolution = value.get<int>();
      else throw ParseError(path + ": unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

void write_train_config_json(const TrainConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << config_to_json(cfg).dump(2) << '\n';
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ContractError("adam_step: parameter/gradient/state shape mismatch");
  }
  state.step += 1;
  const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  double* m = state.m.data();
  double* v = state.v.data();
  double* p = params.data();
  const double* g = grads.data();
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  });
}

namespace {

void resolve_bounds(const SceneDataset& ds, const TrainConfig& cfg, double& near, double& far) {
  near = cfg.near > 0.0 ? cfg.near : ds.near;
  far = cfg.far > 0.0 ? cfg.far : ds.far;
  if (!(near > 0.0 && near < far)) {
    throw ArgumentError("train: invalid near/far bounds");
  }
}

}  // namespace

std::vector<TrainRay> sample_ray_batch(const SceneDataset& ds, const TrainConfig& cfg,
                                       Rng& rng) {
  if (ds.train_views.empty()) throw ArgumentError("sample_ray_batch: no training views");
  double near, far;
  resolve_bounds(ds, cfg, near, far);

  const bool depth_on = cfg.depth_mode != DepthMode::kNone;
  const bool keypoint_rays = depth_on && !cfg.dense_depth && cfg.keypoint_ray_fraction > 0.0;
  const int batch = cfg.rays_per_batch;
  const int n_keypoint =
      keypoint_rays ? static_cast<int>(cfg.keypoint_ray_fraction * batch) : 0;
  if (keypoint_rays && ds.keypoints.empty()) {
    throw ArgumentError("sample_ray_batch: keypoint rays requested but dataset has none");
  }

  std::vector<TrainRay> rays;
  rays.reserve(batch);
  for (int r = 0; r < n_keypoint; ++r) {
    const KeypointDepth& kp = ds.keypoints[rng.index(ds.keypoints.size())];
    const int view_idx = ds.train_index_of(kp.image_id);
    const ViewRecord& view = ds.train_views[view_idx];
    TrainRay ray;
    ray.ray = make_ray(view.camera, kp.u, kp.v, near, far);
    ray.rgb_target = bilinear_sample(view.image, kp.u, kp.v);
    ray.depth = DepthTarget{kp.depth, kp.sigma_hat};
    rays.push_back(std::move(ray));
  }
  for (int r = n_keypoint; r < batch; ++r) {
    const ViewRecord& view = ds.train_views[rng.index(ds.train_views.size())];
    const int i = static_cast<int>(rng.index(view.camera.width));
    const int j = static_cast<int>(rng.index(view.camera.height));
    TrainRay ray;
    ray.ray = make_ray(view.camera, i + 0.5, j + 0.5, near, far);
    ray.rgb_target = view.image.pixel(i, j);
    if (depth_on && cfg.dense_depth) {
      const double d = view.ref_depth.at(i, j);
      if (d > 0.0) ray.depth = DepthTarget{d, ds.sigma_dense};
    }
    rays.push_back(std::move(ray));
  }
  return rays;
}

void render_view(const VoxelField& field, const Camera& camera, int samples_per_ray,
                 double near, double far, Image& image, DepthMap& depth,
                 DepthMap* term_variance) {
  image = Image::zeros(camera.width, camera.height);
  depth = DepthMap::zeros(camera.width, camera.height);
  if (term_variance) *term_variance = DepthMap::zeros(camera.width, camera.height);
  parallel_for(static_cast<std::size_t>(camera.height), [&](std::size_t j0, std::size_t j1) {
    for (std::size_t j = j0; j < j1; ++j) {
      for (int i = 0; i < camera.width; ++i) {
        const Ray ray = make_ray(camera, i + 0.5, j + 0.5, near, far);
        const RayRender render = render_ray(field, midpoint_samples(ray, samples_per_ray));
        image.set_pixel(i, static_cast<int>(j), render.color);
        depth.set(i, static_cast<int>(j), static_cast<float>(render.depth_mean));
        if (term_variance) {
          term_variance->set(i, static_cast<int>(j), static_cast<float>(render.depth_var));
        }
      }
    }
  });
}

AlignParams fit_keypoint_alignment(const SceneDataset& ds) {
  std::vector<double> d_src, d_ref;
  for (const auto& kp : ds.keypoints) {
    const int idx = ds.train_index_of(kp.image_id);
    if (idx < 0) continue;
    const ViewRecord& view = ds.train_views[idx];
    const int i = std::clamp(static_cast<int>(kp.u), 0, view.camera.width - 1);
    const int j = std::clamp(static_cast<int>(kp.v), 0, view.camera.height - 1);
    const double ref = view.ref_depth.at(i, j);
    if (!(ref > 0.0)) continue;
    d_src.push_back(kp.depth);
    d_ref.push_back(ref);
  }
  if (d_src.size() < 2) return AlignParams{};
  try {
    return fit_scale_shift(d_src, d_ref);
  } catch (const ArgumentError&) {
    return AlignParams{};  // degenerate keypoint set: fall back to identity
  }
}

EvalRow evaluate_field(const VoxelField& field, const SceneDataset& ds, const TrainConfig& cfg,
                       const AlignParams& align, int iter) {
  if (ds.test_views.empty()) throw ArgumentError("evaluate_field: dataset has no test views");
  double near, far;
  resolve_bounds(ds, cfg, near, far);

  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  double var_sum = 0.0;
  std::size_t var_count = 0;
  std::vector<double> pred_depths, ref_depths;
  for (const auto& view : ds.test_views) {
    Image rendered;
    DepthMap depth, variance;
    render_view(field, view.camera, cfg.samples_per_ray, near, far, rendered, depth, &variance);
    psnr_sum += psnr(rendered, view.image);
    ssim_sum += ssim(rendered, view.image);
    for (std::size_t p = 0; p < depth.data.size(); ++p) {
      pred_depths.push_back(depth.data[p]);
      ref_depths.push_back(view.ref_depth.data[p]);
      var_sum += variance.data[p];
      ++var_count;
    }
  }

  EvalRow row;
  row.iter = iter;
  row.psnr = psnr_sum / static_cast<double>(ds.test_views.size());
  row.ssim = ssim_sum / static_cast<double>(ds.test_views.size());
  row.depth_err_pct = depth_error_percent(pred_depths, ref_depths, align);
  row.mean_term_var = var_sum / static_cast<double>(var_count);
  return row;
}

namespace {

struct GradEntry {
  std::uint32_t node = 0;
  double d_sigma = 0.0;
  double d_rgb[3] = {0.0, 0.0, 0.0};
};

template <bool WithDepth>
TrainResult run_training(const SceneDataset& ds, const TrainConfig& cfg,
                         const CheckpointSink& sink) {
  cfg.validate();
  if (ds.train_views.empty()) throw ArgumentError("train: dataset has no training views");
  const bool depth_on = cfg.depth_mode != DepthMode::kNone;
  if (!WithDepth && depth_on) {
    throw ArgumentError("train_color_only requires depth_mode none");
  }
  if (depth_on && cfg.dense_depth && !ds.dense_supervision) {
    throw ArgumentError("train: dense depth requested but dataset was not built with it");
  }
  if (depth_on && !cfg.dense_depth && cfg.keypoint_ray_fraction > 0.0 && ds.keypoints.empty()) {
    throw ArgumentError("train: depth supervision requested but dataset has no keypoints");
  }
  double near, far;
  resolve_bounds(ds, cfg, near, far);

  TrainResult result{
      VoxelField(cfg.grid_resolution, cfg.grid_resolution, cfg.grid_resolution, ds.bbox_min,
                 ds.bbox_max),
      {},
      {}};
  VoxelField& field = result.field;
  result.loss_curve.reserve(cfg.iters);

  const AlignParams align = fit_keypoint_alignment(ds);
  Rng rng(cfg.seed);

  const std::size_t batch = static_cast<std::size_t>(cfg.rays_per_batch);
  const std::size_t k = static_cast<std::size_t>(cfg.samples_per_ray);
  FieldGradients grads(field);
  AdamState sigma_state(field.raw_sigma().size());
  AdamState rgb_state(field.raw_rgb().size());
  std::vector<RayRender> renders(batch);
  std::vector<Vec3> targets(batch);
  std::vector<std::uint64_t> ray_seeds(batch);
  std::vector<double> d_depth(batch, 0.0);
  std::vector<std::vector<double>> d_h(batch);
  std::vector<GradEntry> entries(batch * k * 8);
  std::vector<std::uint32_t> entry_counts(batch, 0);

  for (int iter = 0; iter < cfg.iters; ++iter) {
    const std::vector<TrainRay> rays = sample_ray_batch(ds, cfg, rng);
    for (std::size_t r = 0; r < batch; ++r) {
      ray_seeds[r] = rng.raw();
      targets[r] = rays[r].rgb_target;
      d_depth[r] = 0.0;
      d_h[r].clear();
    }

    parallel_for(batch, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t r = lo; r < hi; ++r) {
        Rng ray_rng(ray_seeds[r]);
        renders[r] =
            render_ray(field, stratified_samples(rays[r].ray, cfg.samples_per_ray, ray_rng));
      }
    });

    const ColorLoss color = color_loss(renders, targets);

    double depth_part = 0.0;
    std::size_t n_keypoint = 0;
    if constexpr (WithDepth) {
      if (depth_on) {
        for (const auto& ray : rays) {
          if (ray.depth) ++n_keypoint;
        }
        if (n_keypoint > 0) {
          const double scale = cfg.lambda_depth / static_cast<double>(n_keypoint);
          std::vector<double> values;
          values.reserve(n_keypoint);
          for (std::size_t r = 0; r < batch; ++r) {
            if (!rays[r].depth) continue;
            if (cfg.depth_mode == DepthMode::kKl) {
              KlLoss kl = depth_kl_loss(renders[r], *rays[r].depth);
              values.push_back(kl.value);
              for (double& g : kl.d_h) g *= scale;
              d_h[r] = std::move(kl.d_h);
            } else {
              const MseLoss mse = depth_mse_loss(renders[r], *rays[r].depth);
              values.push_back(mse.value);
              d_depth[r] = mse.d_depth * scale;
            }
          }
          depth_part = pairwise_sum(values.data(), values.size()) /
                       static_cast<double>(n_keypoint);
        }
      }
    }

    const LossReport report = total_loss(color.value, batch - n_keypoint, depth_part,
                                         n_keypoint, cfg.lambda_depth, cfg.depth_mode);
    if (!std::isfinite(report.total)) {
      std::size_t bad_ray = 0;
      for (std::size_t r = 0; r < batch; ++r) {
        if (!renders[r].color.allFinite() || !std::isfinite(renders[r].depth_mean)) {
          bad_ray = r;
          break;
        }
      }
      throw NumericalError("non-finite loss at iteration " + std::to_string(iter) +
                           " (batch ray " + std::to_string(bad_ray) + ")");
    }
    result.loss_curve.push_back(report);

    parallel_for(batch, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t r = lo; r < hi; ++r) {
        std::size_t pos = r * k * 8;
        std::uint32_t count = 0;
        detail::ray_backward(
            renders[r], color.d_color[r], d_depth[r], d_h[r],
            [&](std::size_t sample, double ds_, const Vec3& dc) {
              expand_field_grad(renders[r].field_samples[sample].handle, ds_, dc,
                                [&](std::uint32_t node, double dsig, const Vec3& drgb) {
                                  GradEntry& e = entries[pos + count++];
                                  e.node = node;
                                  e.d_sigma = dsig;
                                  e.d_rgb[0] = drgb[0];
                                  e.d_rgb[1] = drgb[1];
                                  e.d_rgb[2] = drgb[2];
                                });
            });
        entry_counts[r] = count;
      }
    });

    // Merge worker output in ray order: deterministic for any thread count.
    grads.clear();
    for (std::size_t r = 0; r < batch; ++r) {
      const GradEntry* seg = entries.data() + r * k * 8;
      for (std::uint32_t e = 0; e < entry_counts[r]; ++e) {
        grads.d_raw_sigma[seg[e].node] += seg[e].d_sigma;
        double* g = &grads.d_raw_rgb[static_cast<std::size_t>(seg[e].node) * 3];
        g[0] += seg[e].d_rgb[0];
        g[1] += seg[e].d_rgb[1];
        g[2] += seg[e].d_rgb[2];
      }
    }

    adam_step(field.raw_sigma(), grads.d_raw_sigma, sigma_state, cfg.lr, cfg.beta1, cfg.beta2,
              cfg.adam_eps);
    adam_step(field.raw_rgb(), grads.d_raw_rgb, rgb_state, cfg.lr, cfg.beta1, cfg.beta2,
              cfg.adam_eps);

    const int done = iter + 1;
    if (done % cfg.eval_every == 0 || done == cfg.iters) {
      result.history.push_back(evaluate_field(field, ds, cfg, align, done));
      if (sink) sink(done, field);
    }
  }
  return result;
}

}  // namespace

TrainResult train(const SceneDataset& dataset, const TrainConfig& cfg,
                  const CheckpointSink& checkpoint_sink) {
  return run_training<true>(dataset, cfg, checkpoint_sink);
}

TrainResult train_color_only(const SceneDataset& dataset, const TrainConfig& cfg) {
  return run_training<false>(dataset, cfg, nullptr);
}

}  // namespace dsvoxel
