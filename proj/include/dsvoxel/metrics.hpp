// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "dsvoxel/image.hpp"

namespace dsvoxel {

/// Affine map a * d - b reconciling two depth sources.
struct AlignParams {
  double a = 1.0;
  double b = 0.0;

  double apply(double d) const { return a * d - b; }
};

/// Closed-form least squares of min_{a,b} sum (a * d_src[i] - b - d_ref[i])^2.
/// Needs >= 2 pairs and non-constant d_src.
AlignParams fit_scale_shift(std::span<const double> d_src, std::span<const double> d_ref);

/// Mean absolute relative error, in percent, of the aligned prediction:
/// mean over valid entries of |a*d_pred - b - d_ref| / d_ref * 100. Entries
/// with d_ref <= 0 are skipped; throws if nothing remains.
double depth_error_percent(std::span<const double> d_pred, std::span<const double> d_ref,
                           const AlignParams& align);

/// Peak signal-to-noise ratio with peak 1.0; +infinity for identical images.
double psnr(const Image& a, const Image& b);

/// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, computed per channel over the valid interior and averaged.
double ssim(const Image& a, const Image& b);

}  // namespace dsvoxel
