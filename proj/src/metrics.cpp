// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "dsvoxel/errors.hpp"
#include "dsvoxel/parallel.hpp"

namespace dsvoxel {

AlignParams fit_scale_shift(std::span<const double> d_src, std::span<const double> d_ref) {
  if (d_src.size() != d_ref.size()) throw ArgumentError("fit_scale_shift: length mismatch");
  const std::size_t n = d_src.size();
  if (n < 2) throw ArgumentError("fit_scale_shift: need at least 2 pairs");

  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += d_src[i];
    mean_y += d_ref[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double var_x = 0.0, cov_xy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = d_src[i] - mean_x;
    var_x += dx * dx;
    cov_xy += dx * (d_ref[i] - mean_y);
  }
  if (var_x <= 1e-18 * static_cast<double>(n)) {
    throw ArgumentError("fit_scale_shift: degenerate (constant) source depths");
  }
  AlignParams p;
  p.a = cov_xy / var_x;
  p.b = p.a * mean_x - mean_y;
  return p;
}

double depth_error_percent(std::span<const double> d_pred, std::span<const double> d_ref,
                           const AlignParams& align) {
  if (d_pred.size() != d_ref.size()) throw ArgumentError("depth_error: length mismatch");
  double sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < d_pred.size(); ++i) {
    if (!(d_ref[i] > 0.0)) continue;
    sum += std::abs(align.apply(d_pred[i]) - d_ref[i]) / d_ref[i];
    ++valid;
  }
  if (valid == 0) throw ArgumentError("depth_error: no valid reference entries");
  return sum / static_cast<double>(valid) * 100.0;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ArgumentError("psnr: image shapes differ");
  }
  const std::size_t n = a.data.size();
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a.data[i] - b.data[i];
    sq[i] = d * d;
  }
  const double mse = pairwise_sum(sq.data(), n) / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2 with L = 1
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  const double sigma = 1.5;
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable Gaussian blur, valid region only: output is
// (w - kWindow + 1) x (h - kWindow + 1).
std::vector<double> blur_valid(const std::vector<double>& plane, int w, int h, int& ow, int& oh) {
  const auto taps = gaussian_taps();
  ow = w - kWindow + 1;
  oh = h - kWindow + 1;
  std::vector<double> horiz(static_cast<std::size_t>(ow) * h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < ow; ++i) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * plane[static_cast<std::size_t>(j) * w + i + k];
      horiz[static_cast<std::size_t>(j) * ow + i] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int j = 0; j < oh; ++j) {
    for (int i = 0; i < ow; ++i) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * horiz[static_cast<std::size_t>(j + k) * ow + i];
      out[static_cast<std::size_t>(j) * ow + i] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ArgumentError("ssim: image shapes differ");
  }
  if (a.width < kWindow || a.height < kWindow) {
    throw ArgumentError("ssim: images must be at least 11x11");
  }
  const int w = a.width, h = a.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;

  double channel_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.data[3 * i + c];
      y[i] = b.data[3 * i + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    int ow = 0, oh = 0;
    const auto mu_x = blur_valid(x, w, h, ow, oh);
    const auto mu_y = blur_valid(y, w, h, ow, oh);
    const auto mu_xx = blur_valid(xx, w, h, ow, oh);
    const auto mu_yy = blur_valid(yy, w, h, ow, oh);
    const auto mu_xy = blur_valid(xy, w, h, ow, oh);

    const std::size_t m = static_cast<std::size_t>(ow) * oh;
    std::vector<double> ssim_map(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double var_x = mu_xx[i] - mu_x[i] * mu_x[i];
      const double var_y = mu_yy[i] - mu_y[i] * mu_y[i];
      const double cov = mu_xy[i] - mu_x[i] * mu_y[i];
      ssim_map[i] = (2.0 * mu_x[i] * mu_y[i] + kC1) * (2.0 * cov + kC2) /
                    ((mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (var_x + var_y + kC2));
    }
    channel_sum += pairwise_sum(ssim_map.data(), m) / static_cast<double>(m);
  }
  return channel_sum / 3.0;
}

}  // namespace dsvoxel
