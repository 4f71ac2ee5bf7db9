// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

#include "dsvoxel/errors.hpp"
#include "test_support.hpp"

using namespace dsvoxel;

namespace {

DatasetSpec small_spec(int views, std::uint64_t seed) {
  DatasetSpec spec;
  spec.train_views = views;
  spec.test_views = 2;
  spec.resolution = 32;
  spec.sfm = SfmSource::kSimulated;
  spec.noise_3d = 0.01;
  spec.keypoints_per_view = 60;
  spec.keypoint.sigma_floor = 0.05;
  spec.seed = seed;
  return spec;
}

TrainConfig small_config(DepthMode mode, int iters, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.depth_mode = mode;
  cfg.samples_per_ray = 48;
  cfg.rays_per_batch = 96;
  cfg.iters = iters;
  cfg.eval_every = 50;
  cfg.grid_resolution = 24;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("adam leaves parameters alone under zero gradients") {
  std::vector<double> params = {1.0, -2.0, 0.5};
  const std::vector<double> zeros(3, 0.0);
  AdamState state(3);
  adam_step(params, zeros, state, 0.1, 0.9, 0.999, 1e-8);
  CHECK(params == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("first adam step moves by about -lr under unit gradient") {
  std::vector<double> params = {0.0};
  const std::vector<double> grad = {1.0};
  AdamState state(1);
  adam_step(params, grad, state, 0.1, 0.9, 0.999, 1e-8);
  CHECK(std::abs(params[0] + 0.1) < 1e-6);
}

TEST_CASE("adam converges on the quadratic bowl") {
  std::vector<double> theta = {1.0};
  AdamState state(1);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> grad = {2.0 * theta[0]};
    adam_step(theta, grad, state, 0.05, 0.9, 0.999, 1e-8);
  }
  CHECK(std::abs(theta[0]) < 1e-2);
}

TEST_CASE("adam rejects shape mismatches") {
  std::vector<double> params = {1.0, 2.0};
  const std::vector<double> grad = {1.0};
  AdamState state(2);
  CHECK_THROWS_AS(adam_step(params, grad, state, 0.1, 0.9, 0.999, 1e-8), ContractError);
}

TEST_CASE("fraction zero gives a pure color batch") {
  const SceneDataset ds = gen_dataset(small_spec(2, 4));
  TrainConfig cfg = small_config(DepthMode::kKl, 10, 1);
  cfg.keypoint_ray_fraction = 0.0;
  Rng rng(5);
  const auto batch = sample_ray_batch(ds, cfg, rng);
  CHECK(batch.size() == static_cast<std::size_t>(cfg.rays_per_batch));
  for (const auto& ray : batch) CHECK_FALSE(ray.depth.has_value());
}

TEST_CASE("keypoint rays interpolate their RGB target bilinearly") {
  // 2x2 image with corners (0,0,0), (1,1,1) / (1,1,1), (0,0,0); the center
  // of the image interpolates to exactly mid gray.
  SceneDataset ds;
  ViewRecord view;
  view.view_id = 1;
  view.camera.fx = view.camera.fy = 2.0;
  view.camera.cx = view.camera.cy = 1.0;
  view.camera.width = view.camera.height = 2;
  view.image = Image::zeros(2, 2);
  view.image.set_pixel(0, 0, Vec3(0, 0, 0));
  view.image.set_pixel(1, 0, Vec3(1, 1, 1));
  view.image.set_pixel(0, 1, Vec3(1, 1, 1));
  view.image.set_pixel(1, 1, Vec3(0, 0, 0));
  view.ref_depth = DepthMap::zeros(2, 2);
  ds.train_views.push_back(view);
  ds.near = 0.5;
  ds.far = 4.0;
  ds.bbox_min = Vec3(-1, -1, -3);
  ds.bbox_max = Vec3(1, 1, -0.5);
  ds.keypoints.push_back({1, 1.0, 1.0, 2.0, 0.1, 1});

  TrainConfig cfg = small_config(DepthMode::kKl, 1, 1);
  cfg.rays_per_batch = 4;
  cfg.keypoint_ray_fraction = 0.5;
  Rng rng(2);
  const auto batch = sample_ray_batch(ds, cfg, rng);
  REQUIRE(batch.size() == 4);
  REQUIRE(batch[0].depth.has_value());
  CHECK(batch[0].rgb_target.isApprox(Vec3(0.5, 0.5, 0.5), 1e-12));
  CHECK(batch[0].depth->depth == doctest::Approx(2.0));
}

TEST_CASE("batches are deterministic per seed") {
  const SceneDataset ds = gen_dataset(small_spec(2, 6));
  const TrainConfig cfg = small_config(DepthMode::kKl, 10, 1);
  Rng rng_a(9), rng_b(9);
  const auto a = sample_ray_batch(ds, cfg, rng_a);
  const auto b = sample_ray_batch(ds, cfg, rng_b);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ray.origin == b[i].ray.origin);
    CHECK(a[i].ray.direction == b[i].ray.direction);
    CHECK(a[i].rgb_target == b[i].rgb_target);
    CHECK(a[i].depth.has_value() == b[i].depth.has_value());
  }
}

TEST_CASE("keypoint rays without keypoints are a config error") {
  SceneDataset ds = gen_dataset(small_spec(2, 7));
  ds.keypoints.clear();
  const TrainConfig cfg = small_config(DepthMode::kKl, 10, 1);
  Rng rng(3);
  CHECK_THROWS_AS(sample_ray_batch(ds, cfg, rng), ArgumentError);
  CHECK_THROWS_AS(train(ds, cfg), ArgumentError);
}

TEST_CASE("dense batches carry exact per-pixel depth targets") {
  DatasetSpec spec = small_spec(2, 8);
  spec.dense = true;
  const SceneDataset ds = gen_dataset(spec);
  TrainConfig cfg = small_config(DepthMode::kKl, 10, 1);
  cfg.dense_depth = true;
  cfg.rays_per_batch = 256;

  std::set<float> depth_values;
  for (const auto& view : ds.train_views) {
    for (float d : view.ref_depth.data) depth_values.insert(d);
  }
  Rng rng(17);
  const auto batch = sample_ray_batch(ds, cfg, rng);
  std::size_t with_target = 0;
  for (const auto& ray : batch) {
    if (!ray.depth) continue;
    ++with_target;
    CHECK(depth_values.count(static_cast<float>(ray.depth->depth)) == 1);
    CHECK(ray.depth->sigma_hat == ds.sigma_dense);
  }
  CHECK(with_target > 200);
}

TEST_CASE("zero iterations returns the initialized field and empty history") {
  const SceneDataset ds = gen_dataset(small_spec(2, 10));
  const TrainResult result = train(ds, small_config(DepthMode::kNone, 0, 1));
  CHECK(result.history.empty());
  CHECK(result.loss_curve.empty());
  const FieldSample s = result.field.sample(Vec3(0, 0, -5));
  CHECK(s.sigma == doctest::Approx(0.12692801104297249));
}

TEST_CASE("training histories are bit-identical across reruns") {
  const SceneDataset ds = gen_dataset(small_spec(2, 11));
  const TrainConfig cfg = small_config(DepthMode::kKl, 60, 13);
  const TrainResult a = train(ds, cfg);
  const TrainResult b = train(ds, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i] == b.history[i]);
  REQUIRE(a.loss_curve.size() == b.loss_curve.size());
  for (std::size_t i = 0; i < a.loss_curve.size(); ++i) {
    CHECK(a.loss_curve[i].total == b.loss_curve[i].total);
  }
  CHECK(a.field.raw_sigma() == b.field.raw_sigma());
}

TEST_CASE("depth mode none equals the build without the depth branch") {
  const SceneDataset ds = gen_dataset(small_spec(2, 12));
  const TrainConfig cfg = small_config(DepthMode::kNone, 60, 14);
  const TrainResult full = train(ds, cfg);
  const TrainResult stripped = train_color_only(ds, cfg);
  REQUIRE(full.history.size() == stripped.history.size());
  for (std::size_t i = 0; i < full.history.size(); ++i) {
    CHECK(full.history[i] == stripped.history[i]);
  }
  for (std::size_t i = 0; i < full.loss_curve.size(); ++i) {
    CHECK(full.loss_curve[i].total == stripped.loss_curve[i].total);
  }
  CHECK(full.field.raw_sigma() == stripped.field.raw_sigma());
  CHECK_THROWS_AS(train_color_only(ds, small_config(DepthMode::kKl, 10, 1)), ArgumentError);
}

TEST_CASE("non-finite targets abort with a diagnostic") {
  SceneDataset ds = gen_dataset(small_spec(1, 15));
  for (auto& view : ds.train_views) {
    std::fill(view.image.data.begin(), view.image.data.end(),
              std::numeric_limits<double>::quiet_NaN());
  }
  const TrainConfig cfg = small_config(DepthMode::kNone, 5, 1);
  try {
    train(ds, cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    CHECK(std::string(e.what()).find("ray") != std::string::npos);
  }
}

TEST_CASE("checkpoint sink fires at every evaluation") {
  const SceneDataset ds = gen_dataset(small_spec(2, 16));
  TrainConfig cfg = small_config(DepthMode::kNone, 100, 3);
  cfg.eval_every = 25;
  std::vector<int> calls;
  train(ds, cfg, [&](int iter, const VoxelField&) { calls.push_back(iter); });
  CHECK(calls == std::vector<int>{25, 50, 75, 100});
}

TEST_CASE("single view overfit reaches 30 dB on the training view") {
  DatasetSpec spec;
  spec.train_views = 1;
  spec.test_views = 1;
  spec.resolution = 64;
  spec.sfm = SfmSource::kNoiseless;
  spec.keypoints_per_view = 10;
  spec.seed = 19;
  const SceneDataset ds = gen_dataset(spec);

  TrainConfig cfg;
  cfg.depth_mode = DepthMode::kNone;
  cfg.samples_per_ray = 96;
  cfg.rays_per_batch = 256;
  cfg.iters = 2000;
  cfg.eval_every = 1000;
  cfg.grid_resolution = 32;
  cfg.seed = 1;
  const TrainResult result = train(ds, cfg);

  Image rendered;
  DepthMap depth;
  render_view(result.field, ds.train_views[0].camera, cfg.samples_per_ray, ds.near, ds.far,
              rendered, depth);
  CHECK(psnr(rendered, ds.train_views[0].image) > 30.0);
}

TEST_CASE("median loss per 500-iteration window does not increase") {
  const auto median_of = [](const std::vector<LossReport>& curve, std::size_t lo,
                            std::size_t hi) {
    std::vector<double> window;
    for (std::size_t i = lo; i < hi; ++i) window.push_back(curve[i].total);
    std::sort(window.begin(), window.end());
    return window[window.size() / 2];
  };

  DatasetSpec spec;
  spec.train_views = 3;
  spec.test_views = 2;
  spec.resolution = 64;
  spec.sfm = SfmSource::kSimulated;
  spec.noise_3d = 0.01;
  spec.keypoints_per_view = 150;
  spec.keypoint.sigma_floor = 0.05;
  spec.seed = 30;
  const SceneDataset ds = gen_dataset(spec);

  for (DepthMode mode : {DepthMode::kNone, DepthMode::kKl, DepthMode::kMse}) {
    CAPTURE(to_string(mode));
    TrainConfig cfg;
    cfg.depth_mode = mode;
    cfg.samples_per_ray = 96;
    cfg.rays_per_batch = 256;
    cfg.iters = 1500;
    cfg.eval_every = 1500;
    cfg.grid_resolution = 64;
    cfg.seed = 2;
    const TrainResult result = train(ds, cfg);
    const double m1 = median_of(result.loss_curve, 0, 500);
    const double m2 = median_of(result.loss_curve, 500, 1000);
    const double m3 = median_of(result.loss_curve, 1000, 1500);
    CHECK(m1 >= m2);
    CHECK(m2 >= m3);
  }
}

TEST_CASE("KL training sharpens the termination distribution over time") {
  DatasetSpec spec = small_spec(5, 31);
  spec.resolution = 48;
  spec.keypoints_per_view = 100;
  const SceneDataset ds = gen_dataset(spec);

  TrainConfig cfg;
  cfg.depth_mode = DepthMode::kKl;
  cfg.samples_per_ray = 96;
  cfg.rays_per_batch = 256;
  cfg.iters = 1200;
  cfg.eval_every = 1200;
  cfg.grid_resolution = 48;
  cfg.seed = 3;

  const AlignParams align = fit_keypoint_alignment(ds);
  const VoxelField init(cfg.grid_resolution, cfg.grid_resolution, cfg.grid_resolution,
                        ds.bbox_min, ds.bbox_max);
  const EvalRow before = evaluate_field(init, ds, cfg, align, 0);
  const TrainResult result = train(ds, cfg);
  CHECK(result.history.back().mean_term_var < before.mean_term_var);
}

TEST_CASE("train config json round trip and validation") {
  test::TempDir dir("cfg");
  TrainConfig cfg = small_config(DepthMode::kMse, 123, 77);
  cfg.lambda_depth = 0.35;
  const std::string path = dir.file("config.json");
  write_train_config_json(cfg, path);
  const TrainConfig loaded = train_config_from_json_file(path);
  CHECK(loaded.lambda_depth == cfg.lambda_depth);
  CHECK(loaded.depth_mode == cfg.depth_mode);
  CHECK(loaded.iters == cfg.iters);
  CHECK(loaded.seed == cfg.seed);

  TrainConfig bad = cfg;
  bad.lambda_depth = -0.5;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = cfg;
  bad.keypoint_ray_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = cfg;
  bad.samples_per_ray = 1;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}
