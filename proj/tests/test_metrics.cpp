// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/metrics.hpp"

#include <doctest.h>

#include <cmath>

#include "dsvoxel/errors.hpp"
#include "test_support.hpp"

using namespace dsvoxel;

TEST_CASE("fit_scale_shift on an exact affine relation") {
  const std::vector<double> src = {1, 2, 3};
  const std::vector<double> ref = {1, 3, 5};
  const AlignParams p = fit_scale_shift(src, ref);
  CHECK(p.a == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p.b == doctest::Approx(1.0).epsilon(1e-12));

  const AlignParams ident = fit_scale_shift(src, src);
  CHECK(ident.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ident.b == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fit_scale_shift rejects degenerate input") {
  const std::vector<double> constant = {2, 2, 2};
  const std::vector<double> ref = {1, 2, 3};
  CHECK_THROWS_AS(fit_scale_shift(constant, ref), ArgumentError);
  CHECK_THROWS_AS(fit_scale_shift(std::vector<double>{1.0}, std::vector<double>{1.0}),
                  ArgumentError);
}

TEST_CASE("fit_scale_shift recovers random affine maps exactly") {
  Rng rng(808);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = rng.uniform(0.5, 2.0);
    const double b = rng.uniform(-1.0, 1.0);
    std::vector<double> src(40), ref(40);
    for (std::size_t i = 0; i < src.size(); ++i) {
      src[i] = rng.uniform(1.0, 10.0);
      ref[i] = a * src[i] - b;
    }
    const AlignParams p = fit_scale_shift(src, ref);
    CHECK(std::abs(p.a - a) < 1e-9);
    CHECK(std::abs(p.b - b) < 1e-9);
  }
}

TEST_CASE("least squares beats random perturbations on noisy data") {
  Rng rng(909);
  std::vector<double> src(60), ref(60);
  for (std::size_t i = 0; i < src.size(); ++i) {
    src[i] = rng.uniform(1.0, 9.0);
    ref[i] = 1.4 * src[i] - 0.3 + 0.05 * rng.normal();
  }
  const AlignParams p = fit_scale_shift(src, ref);
  auto residual = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double r = a * src[i] - b - ref[i];
      s += r * r;
    }
    return s;
  };
  const double fitted = residual(p.a, p.b);
  for (int trial = 0; trial < 10000; ++trial) {
    const double da = rng.uniform(-0.2, 0.2);
    const double db = rng.uniform(-0.2, 0.2);
    CHECK(fitted <= residual(p.a + da, p.b + db) + 1e-12);
  }
}

TEST_CASE("depth error percentages") {
  const std::vector<double> ref = {2.0, 4.0};
  CHECK(depth_error_percent(ref, ref, AlignParams{}) == doctest::Approx(0.0));

  const std::vector<double> high = {2.2, 4.4};
  CHECK(depth_error_percent(high, ref, AlignParams{}) == doctest::Approx(10.0));

  const std::vector<double> mixed = {2.2, 3.2};  // +10% and -20%
  CHECK(depth_error_percent(mixed, ref, AlignParams{}) == doctest::Approx(15.0));

  // Entries without reference depth are skipped.
  const std::vector<double> ref_holes = {2.0, 0.0};
  CHECK(depth_error_percent(high, ref_holes, AlignParams{}) == doctest::Approx(10.0));
  const std::vector<double> all_holes = {0.0, 0.0};
  CHECK_THROWS_AS(depth_error_percent(high, all_holes, AlignParams{}), ArgumentError);
}

TEST_CASE("depth error is invariant under rescaling with compensating alignment") {
  Rng rng(33);
  std::vector<double> pred(30), ref(30);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ref[i] = rng.uniform(1.0, 8.0);
    pred[i] = ref[i] * rng.uniform(0.9, 1.1);
  }
  const double base = depth_error_percent(pred, ref, AlignParams{1.0, 0.0});
  for (double s : {0.5, 2.0, 7.5}) {
    std::vector<double> scaled = pred;
    for (double& d : scaled) d *= s;
    const double err = depth_error_percent(scaled, ref, AlignParams{1.0 / s, 0.0});
    CHECK(err == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("psnr reference values") {
  Image a = Image::zeros(16, 16);
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] = 0.25 + 0.5 * ((i / 3) % 2);
  CHECK(std::isinf(psnr(a, a)));

  Image b = a;
  for (double& c : b.data) c += 0.1;  // uniform offset, MSE = 0.01
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

  Image wrong = Image::zeros(8, 8);
  CHECK_THROWS_AS(psnr(a, wrong), ArgumentError);
}

TEST_CASE("psnr strictly decreases as noise grows") {
  Image base = Image::zeros(16, 16);
  for (std::size_t i = 0; i < base.data.size(); ++i) base.data[i] = 0.5;
  double previous = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.02, 0.05, 0.1}) {
    Image noisy = base;
    for (std::size_t i = 0; i < noisy.data.size(); ++i) {
      noisy.data[i] += (i % 2 == 0 ? amp : -amp);
    }
    const double value = psnr(base, noisy);
    CHECK(value < previous);
    previous = value;
  }
}

namespace {

// Direct per-window SSIM, the independent oracle for the separable version.
double ssim_direct(const Image& a, const Image& b) {
  const int win = 11;
  const double sigma = 1.5;
  double taps[11];
  double norm = 0.0;
  for (int i = 0; i < win; ++i) {
    const double d = i - 5.0;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    norm += taps[i];
  }
  for (double& t : taps) t /= norm;

  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double channel_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    int count = 0;
    for (int y = 0; y + win <= a.height; ++y) {
      for (int x = 0; x + win <= a.width; ++x) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (int j = 0; j < win; ++j) {
          for (int i = 0; i < win; ++i) {
            const double w = taps[i] * taps[j];
            const double va = a.pixel(x + i, y + j)[c];
            const double vb = b.pixel(x + i, y + j)[c];
            mx += w * va;
            my += w * vb;
            mxx += w * va * va;
            myy += w * vb * vb;
            mxy += w * va * vb;
          }
        }
        const double vx = mxx - mx * mx;
        const double vy = myy - my * my;
        const double cov = mxy - mx * my;
        sum += (2 * mx * my + c1) * (2 * cov + c2) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
    channel_sum += sum / count;
  }
  return channel_sum / 3.0;
}

Image checkerboard(int w, int h, int phase) {
  Image img = Image::zeros(w, h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const double v = ((i + j + phase) % 2 == 0) ? 0.9 : 0.1;
      img.set_pixel(i, j, Vec3(v, v, v));
    }
  }
  return img;
}

}  // namespace

TEST_CASE("ssim fundamentals") {
  const Image board = checkerboard(24, 24, 0);
  CHECK(ssim(board, board) == doctest::Approx(1.0).epsilon(1e-12));

  Image inverted = board;
  for (double& c : inverted.data) c = 1.0 - c;
  CHECK(ssim(board, inverted) < 1.0);

  const Image small = Image::zeros(8, 8);
  CHECK_THROWS_AS(ssim(small, small), ArgumentError);
}

TEST_CASE("ssim matches the direct-window oracle on a checkerboard shift") {
  const Image a = checkerboard(24, 20, 0);
  const Image b = checkerboard(24, 20, 1);
  CHECK(ssim(a, b) == doctest::Approx(ssim_direct(a, b)).epsilon(1e-6));

  Rng rng(61);
  Image noisy_a = Image::zeros(18, 16);
  Image noisy_b = Image::zeros(18, 16);
  for (std::size_t i = 0; i < noisy_a.data.size(); ++i) {
    noisy_a.data[i] = rng.uniform(0.0, 1.0);
    noisy_b.data[i] = rng.uniform(0.0, 1.0);
  }
  CHECK(ssim(noisy_a, noisy_b) == doctest::Approx(ssim_direct(noisy_a, noisy_b)).epsilon(1e-6));
}

TEST_CASE("ssim is symmetric") {
  Rng rng(71);
  Image a = Image::zeros(16, 16);
  Image b = Image::zeros(16, 16);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = rng.uniform(0.0, 1.0);
    b.data[i] = rng.uniform(0.0, 1.0);
  }
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
}
