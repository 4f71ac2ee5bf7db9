// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/renderer.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

#include "dsvoxel/errors.hpp"
#include "test_support.hpp"

using namespace dsvoxel;

namespace {

Ray axis_ray(double t_near, double t_far) {
  Ray ray;
  ray.origin = Vec3::Zero();
  ray.direction = Vec3(0, 0, -1);
  ray.t_near = t_near;
  ray.t_far = t_far;
  return ray;
}

/// Grid with constant activated density sigma = 1, wide enough to cover the
/// analytic quadrature ray.
VoxelField unit_density_field() {
  VoxelField field(2, 2, 2, Vec3(-1, -1, -11), Vec3(1, 1, 1));
  const double raw = std::log(std::exp(1.0) - 1.0);  // softplus^-1(1)
  std::fill(field.raw_sigma().begin(), field.raw_sigma().end(), raw);
  return field;
}

double analytic_depth_mean(double t_far) { return 1.0 - std::exp(-t_far); }

}  // namespace

TEST_CASE("midpoint samples land at bin centers") {
  const RaySamples s = midpoint_samples(Vec3::Zero(), Vec3(0, 0, -1), 0.0, 1.0, 4);
  REQUIRE(s.size() == 4);
  CHECK(s.t[0] == doctest::Approx(0.125));
  CHECK(s.t[1] == doctest::Approx(0.375));
  CHECK(s.t[2] == doctest::Approx(0.625));
  CHECK(s.t[3] == doctest::Approx(0.875));
  CHECK(s.delta[3] == doctest::Approx(0.25));
}

TEST_CASE("stratified samples stay inside their bins and are seed-deterministic") {
  const Ray ray = axis_ray(2.0, 10.0);
  Rng rng_a(77);
  Rng rng_b(77);
  const RaySamples a = stratified_samples(ray, 32, rng_a);
  const RaySamples b = stratified_samples(ray, 32, rng_b);
  CHECK(a.t == b.t);
  const double bin = (ray.t_far - ray.t_near) / 32.0;
  for (int i = 0; i < 32; ++i) {
    CHECK(a.t[i] >= ray.t_near + i * bin);
    CHECK(a.t[i] < ray.t_near + (i + 1) * bin);
    if (i > 0) CHECK(a.t[i] > a.t[i - 1]);
  }
  CHECK_THROWS_AS(stratified_samples(ray, 1, rng_a), ArgumentError);
}

TEST_CASE("empty space sends all termination mass to the opaque wall") {
  VoxelField field(2, 2, 2, Vec3(-1, -1, -1), Vec3(1, 1, 1));
  // Ray passes entirely outside the bbox: sigma = 0 along the whole ray.
  Ray ray = axis_ray(1.0, 5.0);
  ray.origin = Vec3(5, 5, 0);
  const RayRender render = render_ray(field, midpoint_samples(ray, 16));
  for (std::size_t i = 0; i + 1 < render.h.size(); ++i) CHECK(render.h[i] == 0.0);
  CHECK(render.h.back() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(render.color.isApprox(Vec3(0.5, 0.5, 0.5), 1e-12));
  CHECK(render.depth_mean == doctest::Approx(render.samples.t.back()).epsilon(1e-12));
}

TEST_CASE("one sample with optical depth ln 2 splits the remaining mass in half") {
  VoxelField field(2, 2, 2, Vec3(-2, -2, -4), Vec3(2, 2, 0));
  // Constant sigma; pick delta so sigma * delta = ln 2 at every interior sample.
  const double sigma = softplus(1.3);
  std::fill(field.raw_sigma().begin(), field.raw_sigma().end(), 1.3);
  const double delta = std::log(2.0) / sigma;
  RaySamples samples;
  samples.origin = Vec3::Zero();
  samples.direction = Vec3(0, 0, -1);
  samples.t = {1.0, 1.0 + delta, 1.0 + 2 * delta};
  samples.delta = {delta, delta, delta};
  const RayRender render = render_ray(field, samples);
  CHECK(render.h[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(render.h[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(render.h[2] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("constant density quadrature approaches the analytic depth mean") {
  const VoxelField field = unit_density_field();
  const RaySamples fine = midpoint_samples(Vec3::Zero(), Vec3(0, 0, -1), 0.0, 10.0, 2048);
  const RayRender render = render_ray(field, fine);
  const double expected = analytic_depth_mean(10.0);
  CHECK(std::abs(render.depth_mean - expected) < 2e-3);

  // Convergence order: doubling K shrinks the error.
  const RaySamples finer = midpoint_samples(Vec3::Zero(), Vec3(0, 0, -1), 0.0, 10.0, 4096);
  const double err_fine = std::abs(render.depth_mean - expected);
  const double err_finer = std::abs(render_ray(field, finer).depth_mean - expected);
  CHECK(err_fine / err_finer >= 1.8);
}

TEST_CASE("termination weights form a probability distribution") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const VoxelField field = test::random_field(rng, 5, Vec3(-1, -1, -3), Vec3(1, 1, -0.5));
    Ray ray = axis_ray(0.2, 4.0);
    ray.origin = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0);
    ray.direction = Vec3(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), -1.0);
    const RayRender render = render_ray(field, stratified_samples(ray, 48, rng));

    double sum = 0.0;
    for (double h : render.h) {
      CHECK(h >= 0.0);
      sum += h;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(render.trans[0] == 1.0);
    for (std::size_t i = 1; i < render.trans.size(); ++i) {
      CHECK(render.trans[i] <= render.trans[i - 1] + 1e-15);
      CHECK(render.trans[i] >= 0.0);
      CHECK(render.trans[i] <= 1.0);
    }
    CHECK(render.depth_var >= -1e-12);
  }
}

TEST_CASE("adding density in front of a cutoff never increases tail mass") {
  Rng rng(555);
  int tested = 0;
  while (tested < 50) {
    VoxelField field = test::random_field(rng, 6, Vec3(-1, -1, -4), Vec3(1, 1, 0));
    Ray ray = axis_ray(0.5, 3.5);
    ray.origin = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0);
    const RaySamples samples = midpoint_samples(ray, 32);
    const RayRender before = render_ray(field, samples);

    // Cut between two samples whose contributing nodes are disjoint, then
    // add density only to nodes used strictly before the cut.
    const std::size_t cut = 16;
    std::set<std::uint32_t> front_nodes, back_nodes;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const FieldSample& fs = before.field_samples[i];
      for (int s = 0; s < fs.handle.count; ++s) {
        (i < cut ? front_nodes : back_nodes).insert(fs.handle.node[s]);
      }
    }
    std::vector<std::uint32_t> only_front;
    for (std::uint32_t n : front_nodes) {
      if (!back_nodes.count(n)) only_front.push_back(n);
    }
    if (only_front.empty()) continue;
    ++tested;

    double tail_before = 0.0;
    for (std::size_t i = cut; i < before.h.size(); ++i) tail_before += before.h[i];
    for (std::uint32_t n : only_front) field.raw_sigma()[n] += rng.uniform(0.5, 2.0);
    const RayRender after = render_ray(field, samples);
    double tail_after = 0.0;
    for (std::size_t i = cut; i < after.h.size(); ++i) tail_after += after.h[i];
    CHECK(tail_after <= tail_before + 1e-12);
  }
}

TEST_CASE("backward pass matches finite differences end to end") {
  Rng rng(808);
  const double h_step = 1e-4;
  for (int trial = 0; trial < 50; ++trial) {
    VoxelField field = test::random_field(rng, 4, Vec3(-1, -1, -3), Vec3(1, 1, 0));
    Ray ray = axis_ray(0.3, 2.8);
    ray.origin = Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0.0);
    ray.direction = Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), -1.0);
    const RaySamples samples = midpoint_samples(ray, 24);

    // Random linear functional of the outputs: d_color, d_depth, d_h.
    const Vec3 d_color(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double d_depth = rng.uniform(-1, 1);
    std::vector<double> d_h(samples.size());
    for (double& g : d_h) g = rng.uniform(-1, 1);

    auto objective = [&] {
      const RayRender r = render_ray(field, samples);
      double value = d_color.dot(r.color) + d_depth * r.depth_mean;
      for (std::size_t i = 0; i < r.h.size(); ++i) value += d_h[i] * r.h[i];
      return value;
    };

    const RayRender render = render_ray(field, samples);
    FieldGradients grads(field);
    render_ray_backward(render, d_color, d_depth, d_h, grads);

    // Probe a handful of touched parameters per trial.
    for (int probe = 0; probe < 6; ++probe) {
      const std::size_t sample_idx = rng.index(samples.size());
      const auto& handle = render.field_samples[sample_idx].handle;
      if (handle.count == 0) continue;
      const std::uint32_t node = handle.node[rng.index(handle.count)];

      const double fd_sigma =
          test::fd_derivative(objective, &field.raw_sigma()[node], h_step);
      CHECK(test::rel_error(grads.d_raw_sigma[node], fd_sigma, 1e-6) < 1e-4);

      const int channel = static_cast<int>(rng.index(3));
      const double fd_rgb =
          test::fd_derivative(objective, &field.raw_rgb()[node * 3 + channel], h_step);
      CHECK(test::rel_error(grads.d_raw_rgb[node * 3 + channel], fd_rgb, 1e-6) < 1e-4);
    }
  }
}

TEST_CASE("backward pass with zero cotangents produces zero gradient") {
  Rng rng(9);
  const VoxelField field = test::random_field(rng, 4, Vec3(-1, -1, -3), Vec3(1, 1, 0));
  const RayRender render = render_ray(field, midpoint_samples(axis_ray(0.5, 2.5), 16));
  FieldGradients grads(field);
  render_ray_backward(render, Vec3::Zero(), 0.0, {}, grads);
  for (double g : grads.d_raw_sigma) CHECK(g == 0.0);
  for (double g : grads.d_raw_rgb) CHECK(g == 0.0);
}

TEST_CASE("backward pass rejects mismatched shapes and foreign fields") {
  Rng rng(10);
  const VoxelField field = test::random_field(rng, 4, Vec3(-1, -1, -3), Vec3(1, 1, 0));
  const RayRender render = render_ray(field, midpoint_samples(axis_ray(0.5, 2.5), 16));

  FieldGradients grads(field);
  std::vector<double> wrong(render.h.size() + 1, 0.0);
  CHECK_THROWS_AS(render_ray_backward(render, Vec3::Zero(), 0.0, wrong, grads), ContractError);

  const VoxelField other = test::random_field(rng, 4, Vec3(-1, -1, -3), Vec3(1, 1, 0));
  FieldGradients other_grads(other);
  CHECK_THROWS_AS(render_ray_backward(render, Vec3::Zero(), 0.0, {}, other_grads),
                  ContractError);
}

TEST_CASE("termination variance statistics") {
  CHECK_THROWS_AS(termination_variance_stats({}), ArgumentError);

  // All mass on the wall: zero variance.
  VoxelField field(2, 2, 2, Vec3(-1, -1, -1), Vec3(1, 1, 1));
  Ray ray = axis_ray(1.0, 5.0);
  ray.origin = Vec3(5, 5, 0);
  std::vector<RayRender> renders;
  renders.push_back(render_ray(field, midpoint_samples(ray, 8)));
  CHECK(termination_variance_stats(renders).mean == doctest::Approx(0.0).epsilon(1e-12));

  // Hand-built two-point distribution at t = 1, 2 with equal mass.
  RayRender two;
  two.h = {0.5, 0.5};
  two.samples.t = {1.0, 2.0};
  two.depth_mean = 1.5;
  two.depth_var = 0.25;
  CHECK(termination_variance_stats({two}).mean == doctest::Approx(0.25));
}
