// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "dsvoxel/colmap.hpp"
#include "dsvoxel/dataset.hpp"
#include "dsvoxel/errors.hpp"
#include "dsvoxel/experiments.hpp"
#include "dsvoxel/strings.hpp"
#include "dsvoxel/trainer.hpp"

namespace dsvoxel {

namespace {

namespace fs = std::filesystem;

struct SynthOptions {
  std::string scene = "sphere";
  int views = 5;
  int test_views = 3;
  int resolution = 64;
  std::string sfm = "noiseless";
  double noise = 0.01;
  int kp_per_view = 150;
  bool dense = false;
  double sigma_dense = 0.05;
  double sigma_scale = 0.0;
  double sigma_floor = 1e-3;
  std::uint64_t seed = 1;
  std::string out_dir;
};

void run_synth(const SynthOptions& opt, std::ostream& out) {
  DatasetSpec spec;
  spec.scene = opt.scene;
  spec.train_views = opt.views;
  spec.test_views = opt.test_views;
  spec.resolution = opt.resolution;
  if (opt.sfm == "noiseless") {
    spec.sfm = SfmSource::kNoiseless;
  } else if (opt.sfm == "simulated") {
    spec.sfm = SfmSource::kSimulated;
    spec.noise_3d = opt.noise;
  } else {
    throw ArgumentError("synth: --sfm must be noiseless or simulated");
  }
  spec.keypoints_per_view = opt.kp_per_view;
  spec.dense = opt.dense;
  spec.sigma_dense = opt.sigma_dense;
  spec.seed = opt.seed;
  spec.keypoint.sigma_scale = opt.sigma_scale;
  spec.keypoint.sigma_floor = opt.sigma_floor;

  const SceneDataset ds = gen_dataset(spec);
  save_dataset(ds, opt.out_dir);
  out << "wrote dataset '" << ds.scene_name << "' to " << opt.out_dir << ": "
      << ds.train_views.size() << " train views, " << ds.test_views.size() << " test views, "
      << ds.keypoints.size() << " keypoints\n";
}

struct TrainOptions {
  std::string data_dir;
  std::string config_path;
  std::string out_dir = "train_out";
  std::string name;
  std::string depth_mode;
  double lambda_depth = -1.0;
  int views = 0;
  int iters = -1;
  std::int64_t seed = -1;
  int samples = 0;
  int rays = 0;
  double lr = 0.0;
  int grid = 0;
  int eval_every = 0;
  double kp_fraction = -1.0;
};

TrainConfig resolve_train_config(const TrainOptions& opt) {
  TrainConfig cfg;
  if (!opt.config_path.empty()) cfg = train_config_from_json_file(opt.config_path);
  if (!opt.depth_mode.empty()) {
    if (opt.depth_mode == "dense") {
      cfg.depth_mode = DepthMode::kKl;
      cfg.dense_depth = true;
    } else {
      cfg.depth_mode = depth_mode_from_string(opt.depth_mode);
      cfg.dense_depth = false;
    }
  }
  if (opt.lambda_depth >= 0.0) cfg.lambda_depth = opt.lambda_depth;
  if (opt.iters >= 0) cfg.iters = opt.iters;
  if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
  if (opt.samples > 0) cfg.samples_per_ray = opt.samples;
  if (opt.rays > 0) cfg.rays_per_batch = opt.rays;
  if (opt.lr > 0.0) cfg.lr = opt.lr;
  if (opt.grid > 0) cfg.grid_resolution = opt.grid;
  if (opt.eval_every > 0) cfg.eval_every = opt.eval_every;
  if (opt.kp_fraction >= 0.0) cfg.keypoint_ray_fraction = opt.kp_fraction;
  cfg.validate();
  return cfg;
}

void run_train(const TrainOptions& opt, std::ostream& out) {
  const TrainConfig cfg = resolve_train_config(opt);
  SceneDataset ds = load_dataset(opt.data_dir);
  if (opt.views > 0) ds = ds.with_train_subset(opt.views);

  fs::create_directories(opt.out_dir);
  write_train_config_json(cfg, opt.out_dir + "/config.json");

  const CheckpointSink sink = [&](int, const VoxelField& field) {
    field.save(opt.out_dir + "/ckpt_latest.dsvf");
  };
  const TrainResult result = train(ds, cfg, sink);
  result.field.save(opt.out_dir + "/field_final.dsvf");

  const std::string name =
      opt.name.empty() ? ("train-" + std::string(cfg.dense_depth ? "dense" : to_string(cfg.depth_mode)))
                       : opt.name;
  write_metrics_csv(opt.out_dir + "/history.csv", name,
                    static_cast<int>(ds.train_views.size()), result.history);

  if (!result.history.empty()) {
    const EvalRow& last = result.history.back();
    out << name << ": iter " << last.iter << " psnr " << format_double(last.psnr) << " ssim "
        << format_double(last.ssim) << " depth_err% " << format_double(last.depth_err_pct)
        << '\n';
  }
  out << "outputs in " << opt.out_dir << '\n';
}

struct RenderOptions {
  std::string checkpoint;
  std::string data_dir;
  std::string split = "test";
  int index = 0;
  int samples = 128;
  double near = 0.0;
  double far = 0.0;
  std::string out_prefix;
};

void run_render(const RenderOptions& opt, std::ostream& out) {
  const VoxelField field = VoxelField::load(opt.checkpoint);
  const SceneDataset ds = load_dataset(opt.data_dir);
  const auto& views = opt.split == "train" ? ds.train_views : ds.test_views;
  if (opt.split != "train" && opt.split != "test") {
    throw ArgumentError("render: --split must be train or test");
  }
  if (opt.index < 0 || opt.index >= static_cast<int>(views.size())) {
    throw ArgumentError("render: view index out of range");
  }
  const double near = opt.near > 0.0 ? opt.near : ds.near;
  const double far = opt.far > 0.0 ? opt.far : ds.far;

  Image image;
  DepthMap depth;
  render_view(field, views[opt.index].camera, opt.samples, near, far, image, depth);
  write_ppm(opt.out_prefix + ".ppm", image);
  write_depth_map(opt.out_prefix + ".dsdm", depth);
  out << "wrote " << opt.out_prefix << ".ppm and " << opt.out_prefix << ".dsdm\n";
}

struct EvalOptions {
  std::string checkpoint;
  std::string data_dir;
  std::string name = "eval";
  int iter = 0;
  int samples = 128;
  std::string out_csv;
};

void run_eval(const EvalOptions& opt, std::ostream& out) {
  const VoxelField field = VoxelField::load(opt.checkpoint);
  const SceneDataset ds = load_dataset(opt.data_dir);
  TrainConfig cfg;
  cfg.samples_per_ray = opt.samples;
  const AlignParams align = fit_keypoint_alignment(ds);
  const EvalRow row = evaluate_field(field, ds, cfg, align, opt.iter);
  const std::string csv =
      metrics_csv_string(opt.name, static_cast<int>(ds.train_views.size()), {row});
  if (opt.out_csv.empty()) {
    out << csv;
  } else {
    write_metrics_csv(opt.out_csv, opt.name, static_cast<int>(ds.train_views.size()), {row});
    out << "wrote " << opt.out_csv << '\n';
  }
}

struct ColmapExportOptions {
  std::string model_dir;
  std::string format = "binary";
  std::string out_csv;
  double sigma_scale = 0.0;
  double sigma_floor = 1e-3;
};

void run_colmap_export(const ColmapExportOptions& opt, std::ostream& out, std::ostream& err) {
  SfmFormat format;
  if (opt.format == "binary") {
    format = SfmFormat::kBinary;
  } else if (opt.format == "text") {
    format = SfmFormat::kText;
  } else {
    throw ArgumentError("colmap-export: --format must be binary or text");
  }
  const SfmModel model = parse_colmap(opt.model_dir, format);
  for (const auto& warning : model.warnings) err << "warning: " << warning << '\n';

  KeypointConfig config;
  config.sigma_scale = opt.sigma_scale;
  config.sigma_floor = opt.sigma_floor;
  std::vector<KeypointDepth> all;
  for (const auto& [image_id, image] : model.images) {
    const auto kps = extract_keypoint_depths(model, image_id, config);
    all.insert(all.end(), kps.begin(), kps.end());
  }
  write_keypoint_csv(opt.out_csv, all);
  out << "wrote " << all.size() << " keypoints from " << model.images.size() << " images to "
      << opt.out_csv << '\n';
}

struct CompareOptions {
  int views = 2;
  std::uint64_t seed = 1;
  int iters = 5000;
  std::string out_dir = "compare_out";
  double lambda_depth = -1.0;
  int samples = 0;
  int rays = 0;
};

void run_compare(const CompareOptions& opt, std::ostream& out) {
  fs::create_directories(opt.out_dir);

  ExperimentSetup setup =
      reference_experiment(opt.views, DepthMode::kNone, false, opt.seed, opt.iters);
  if (opt.lambda_depth >= 0.0) setup.config.lambda_depth = opt.lambda_depth;
  if (opt.samples > 0) setup.config.samples_per_ray = opt.samples;
  if (opt.rays > 0) setup.config.rays_per_batch = opt.rays;
  const SceneDataset dataset = gen_dataset(setup.dataset);

  const DepthMode modes[] = {DepthMode::kNone, DepthMode::kMse, DepthMode::kKl};
  std::map<DepthMode, TrainResult> results;
  for (DepthMode mode : modes) {
    TrainConfig cfg = setup.config;
    cfg.depth_mode = mode;
    results.emplace(mode, train(dataset, cfg));
    write_metrics_csv(opt.out_dir + "/history_" + to_string(mode) + ".csv", to_string(mode),
                      opt.views, results.at(mode).history);
  }

  const double ref_psnr = results.at(DepthMode::kNone).history.back().psnr;
  std::ostringstream table;
  table << "mode,views,seed,iters,final_psnr,final_ssim,final_depth_err_pct,iters_to_ref_psnr\n";
  for (DepthMode mode : modes) {
    const auto& history = results.at(mode).history;
    const EvalRow& last = history.back();
    int iters_to_ref = opt.iters;
    for (const auto& row : history) {
      if (row.psnr >= ref_psnr) {
        iters_to_ref = row.iter;
        break;
      }
    }
    table << to_string(mode) << ',' << opt.views << ',' << opt.seed << ',' << opt.iters << ','
          << format_double(last.psnr) << ',' << format_double(last.ssim) << ','
          << format_double(last.depth_err_pct) << ',' << iters_to_ref << '\n';
  }
  const std::string table_str = table.str();
  std::ofstream table_file(opt.out_dir + "/table.csv", std::ios::trunc);
  if (!table_file) throw IoError("cannot open '" + opt.out_dir + "/table.csv' for writing");
  table_file << table_str;
  out << table_str;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"depth-supervised voxel radiance fields"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--scene", synth.scene, "scene preset (sphere)");
  synth_cmd->add_option("--views", synth.views, "training view count")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--test-views", synth.test_views, "test view count")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--res", synth.resolution, "image resolution")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--sfm", synth.sfm, "keypoint source: noiseless|simulated");
  synth_cmd->add_option("--noise", synth.noise, "3D point noise for simulated SFM")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--kp-per-view", synth.kp_per_view, "keypoints per training view")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_flag("--dense", synth.dense, "attach dense depth supervision to train views");
  synth_cmd->add_option("--sigma-dense", synth.sigma_dense, "sigma for dense depth targets")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--sigma-scale", synth.sigma_scale,
                        "fixed pixel->depth factor for sigma_hat (0 = depth/focal)")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--sigma-floor", synth.sigma_floor, "lower bound on sigma_hat")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "rng seed");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();

  TrainOptions train_opt;
  auto* train_cmd = app.add_subcommand("train", "optimize a voxel field on a dataset");
  train_cmd->add_option("--data", train_opt.data_dir, "dataset directory")->required();
  train_cmd->add_option("--config", train_opt.config_path, "training config JSON");
  train_cmd->add_option("--depth-mode", train_opt.depth_mode, "kl|mse|none|dense");
  train_cmd->add_option("--lambda-depth", train_opt.lambda_depth, "depth loss weight")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--views", train_opt.views, "use only the first N training views")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--iters", train_opt.iters, "iterations")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", train_opt.seed, "rng seed")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--samples", train_opt.samples, "samples per ray")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--rays", train_opt.rays, "rays per batch")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_opt.lr, "learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--grid", train_opt.grid, "voxel grid resolution")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--eval-every", train_opt.eval_every, "evaluation period")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--kp-fraction", train_opt.kp_fraction,
                        "fraction of each batch drawn from keypoints");
  train_cmd->add_option("--name", train_opt.name, "experiment name in the metrics CSV");
  train_cmd->add_option("--out", train_opt.out_dir, "output directory");

  RenderOptions render_opt;
  auto* render_cmd = app.add_subcommand("render", "render a checkpoint from a dataset camera");
  render_cmd->add_option("--checkpoint", render_opt.checkpoint, "DSVF checkpoint")->required();
  render_cmd->add_option("--data", render_opt.data_dir, "dataset directory")->required();
  render_cmd->add_option("--split", render_opt.split, "train|test");
  render_cmd->add_option("--index", render_opt.index, "view index within the split");
  render_cmd->add_option("--samples", render_opt.samples, "samples per ray")
      ->check(CLI::PositiveNumber);
  render_cmd->add_option("--near", render_opt.near, "near bound override");
  render_cmd->add_option("--far", render_opt.far, "far bound override");
  render_cmd->add_option("--out", render_opt.out_prefix, "output path prefix")->required();

  EvalOptions eval_opt;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on test views");
  eval_cmd->add_option("--checkpoint", eval_opt.checkpoint, "DSVF checkpoint")->required();
  eval_cmd->add_option("--data", eval_opt.data_dir, "dataset directory")->required();
  eval_cmd->add_option("--name", eval_opt.name, "experiment name in the CSV row");
  eval_cmd->add_option("--iter", eval_opt.iter, "iteration label for the CSV row");
  eval_cmd->add_option("--samples", eval_opt.samples, "samples per ray")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval_opt.out_csv, "CSV output path (default: stdout)");

  ColmapExportOptions colmap_opt;
  auto* colmap_cmd =
      app.add_subcommand("colmap-export", "extract keypoint depth supervision from a COLMAP model");
  colmap_cmd->add_option("--model", colmap_opt.model_dir, "COLMAP sparse model directory")
      ->required();
  colmap_cmd->add_option("--format", colmap_opt.format, "binary|text");
  colmap_cmd->add_option("--out", colmap_opt.out_csv, "keypoint CSV path")->required();
  colmap_cmd->add_option("--sigma-scale", colmap_opt.sigma_scale,
                         "fixed pixel->depth factor (0 = depth/focal)")
      ->check(CLI::NonNegativeNumber);
  colmap_cmd->add_option("--sigma-floor", colmap_opt.sigma_floor, "lower bound on sigma_hat")
      ->check(CLI::PositiveNumber);

  CompareOptions compare_opt;
  auto* compare_cmd =
      app.add_subcommand("compare", "train the kl/mse/none triple and tabulate the results");
  compare_cmd->add_option("--views", compare_opt.views, "training view count")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--seed", compare_opt.seed, "rng seed");
  compare_cmd->add_option("--iters", compare_opt.iters, "iterations per run")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--lambda-depth", compare_opt.lambda_depth, "depth loss weight")
      ->check(CLI::NonNegativeNumber);
  compare_cmd->add_option("--samples", compare_opt.samples, "samples per ray")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--rays", compare_opt.rays, "rays per batch")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--out", compare_opt.out_dir, "output directory");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("dsvoxel");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (synth_cmd->parsed()) run_synth(synth, out);
    if (train_cmd->parsed()) run_train(train_opt, out);
    if (render_cmd->parsed()) run_render(render_opt, out);
    if (eval_cmd->parsed()) run_eval(eval_opt, out);
    if (colmap_cmd->parsed()) run_colmap_export(colmap_opt, out, err);
    if (compare_cmd->parsed()) run_compare(compare_opt, out);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ContractError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace dsvoxel
