// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "dsvoxel/dataset.hpp"
#include "dsvoxel/trainer.hpp"

namespace dsvoxel {

/// Dataset + training setup for the reference desk-scale experiments
/// (the `compare` subcommand and the evaluation suites share it).
struct ExperimentSetup {
  DatasetSpec dataset;
  TrainConfig config;
};

ExperimentSetup reference_experiment(int train_views, DepthMode mode, bool dense,
                                     std::uint64_t seed, int iters);

/// CSV with the schema experiment,views,iter,psnr,ssim,depth_err_pct.
std::string metrics_csv_string(const std::string& experiment, int views,
                               const std::vector<EvalRow>& history);
void write_metrics_csv(const std::string& path, const std::string& experiment, int views,
                       const std::vector<EvalRow>& history);

}  // namespace dsvoxel
