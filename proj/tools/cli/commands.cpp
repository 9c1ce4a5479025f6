#include "cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>

#include "stinpaint/baselines/baselines.hpp"
#include "stinpaint/data/synthetic.hpp"
#include "stinpaint/data/ugb_io.hpp"
#include "stinpaint/eval/eval.hpp"
#include "stinpaint/masking/masking.hpp"
#include "stinpaint/nn/loss.hpp"
#include "stinpaint/train/trainer.hpp"

namespace fs = std::filesystem;

namespace stinpaint::cli {
namespace {

std::ofstream open_text(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  return out;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

/// A 1-frame mask is replicated to `frames`; otherwise shapes must agree.
MaskBlock fit_mask(const MaskBlock& mask, const GridBlock& input) {
  if (mask.rows() != input.rows() || mask.cols() != input.cols()) throw ShapeError("mask grid differs from the input");
  if (mask.frames() == input.frames()) return mask;
  if (mask.frames() == 1) return replicate_mask(mask, input.frames()).mask;
  throw ShapeError("mask has " + std::to_string(mask.frames()) + " frames, input has " +
                   std::to_string(input.frames()));
}

// ---- imputers shared by impute and scenario ----

struct ImputerOptions {
  std::string ckpt;
  std::string baseline;
  std::string train_series;
  std::string table;
  int t = 0;
  int rbf_samples = 500;
  std::uint64_t seed = 0;
};

void add_imputer_options(CLI::App* app, ImputerOptions& o) {
  app->add_option("--ckpt", o.ckpt, "Model checkpoint (UCKP)");
  app->add_option("--baseline", o.baseline, "Classical imputer instead of a model")
      ->check(CLI::IsMember({"mean", "nn2", "nn3", "rbf2", "rbf3"}));
  app->add_option("--train", o.train_series, "Training series for the global-mean baseline");
  app->add_option("--table", o.table, "Precomputed global-mean table (UGB, 24 frames)");
  app->add_option("--t", o.t, "Window length (default: the model's T; 3 for nn3/rbf3, else 1)");
  app->add_option("--rbf-samples", o.rbf_samples, "Valid voxels sampled per RBF fit");
  app->add_option("--seed", o.seed, "Seed for RBF site sampling");
}

struct BuiltImputer {
  Imputer fn;
  int t = 1;
  bool from_model = false;

  /// Baseline windows shrink to short inputs; a model needs exactly its T.
  int window(int available) const { return from_model ? t : std::max(1, std::min(t, available)); }
};

/// `hour_of` maps a series frame index to its hour of day.
BuiltImputer make_imputer(const ImputerOptions& o, RunManifest& m, const std::function<int(int)>& hour_of,
                          int bin_hours) {
  if (o.ckpt.empty() == o.baseline.empty()) throw ParameterError("give exactly one of --ckpt and --baseline");
  BuiltImputer out;
  if (!o.ckpt.empty()) {
    m.input(o.ckpt);
    m.input(o.ckpt + ".cfg");
    auto model = std::make_shared<UNetModel<float>>(load_model(o.ckpt));
    out.t = model->config.temporal_dim;
    out.from_model = true;
    if (o.t != 0 && o.t != out.t) throw ParameterError("--t differs from the checkpoint's temporal dimension");
    out.fn = [model](const GridBlock& block, const MaskBlock& mask, int) {
      return composite(block, mask, unet_predict(*model, block, mask));
    };
    return out;
  }
  const bool volumetric = o.baseline == "nn3" || o.baseline == "rbf3";
  out.t = o.t != 0 ? o.t : (volumetric ? 3 : 1);
  if (o.baseline == "mean") {
    std::shared_ptr<MeanTable> table;
    if (!o.table.empty()) {
      m.input(o.table);
      table = std::make_shared<MeanTable>(read_mean_table(o.table));
    } else if (!o.train_series.empty()) {
      m.input(o.train_series);
      table = std::make_shared<MeanTable>(fit_global_mean(read_series(o.train_series)));
    } else {
      throw ParameterError("the mean baseline needs --train or --table");
    }
    out.fn = [table, hour_of, bin_hours](const GridBlock& block, const MaskBlock& mask, int first) {
      return impute_global_mean(*table, block, mask, hour_of(first), bin_hours);
    };
  } else if (o.baseline == "nn2" || o.baseline == "nn3") {
    const ImputeScope scope = o.baseline == "nn2" ? ImputeScope::k2D : ImputeScope::k3D;
    out.fn = [scope](const GridBlock& block, const MaskBlock& mask, int) { return nn_impute(block, mask, scope); };
  } else {
    const ImputeScope scope = o.baseline == "rbf2" ? ImputeScope::k2D : ImputeScope::k3D;
    RbfConfig cfg;
    cfg.sample_count = o.rbf_samples;
    cfg.seed = o.seed;
    out.fn = [scope, cfg](const GridBlock& block, const MaskBlock& mask, int first) {
      RbfConfig local = cfg;
      local.seed = cfg.seed + static_cast<std::uint64_t>(first);
      return rbf_impute(block, mask, scope, local);
    };
  }
  return out;
}

// ---- subcommands ----

Command synth_cmd(CLI::App& root) {
  struct Opts {
    std::string spec, out;
    int days = 0;
    std::optional<std::uint64_t> seed;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("synth", "Generate a synthetic city series");
  app->add_option("--spec", o->spec, "City spec (key=value); default: built-in city");
  app->add_option("--days", o->days, "Number of days")->required()->check(CLI::PositiveNumber);
  app->add_option("--seed", o->seed, "Noise seed (overrides the spec)");
  app->add_option("-o,--output", o->out, "Output series (UGB)")->required();
  return {app, [o](RunManifest& m) {
            SyntheticCitySpec spec = SyntheticCitySpec::default_city();
            if (!o->spec.empty()) {
              m.input(o->spec);
              spec = SyntheticCitySpec::from_config(KvConfig::load(o->spec));
            }
            if (o->seed) spec.noise_seed = *o->seed;
            m.seed(spec.noise_seed);
            write_series(o->out, generate_synthetic(spec, o->days));
            m.output(o->out);
            m.output(series_meta_path(o->out));
          }};
}

Command rasterize_cmd(CLI::App& root) {
  struct Opts {
    std::string events, region, start, out;
    int frames = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("rasterize", "Bin timestamped events into hourly grids");
  app->add_option("--events", o->events, "CSV with timestamp,lon,lat")->required();
  app->add_option("--region", o->region, "Region config (key=value)")->required();
  app->add_option("--start", o->start, "First frame start, YYYY-MM-DDTHH:MM[:SS]")->required();
  app->add_option("--frames", o->frames, "Number of frames")->required()->check(CLI::PositiveNumber);
  app->add_option("-o,--output", o->out, "Output series (UGB)")->required();
  return {app, [o](RunManifest& m) {
            m.input(o->events);
            m.input(o->region);
            std::ifstream in(o->events);
            if (!in) throw IngestError("cannot open " + o->events);
            const ParsedEvents parsed = parse_events(in);
            RasterStats stats;
            const auto series = rasterize(parsed.records, RegionSpec::from_config(KvConfig::load(o->region)),
                                          parse_wall_time(o->start), o->frames, &stats);
            write_series(o->out, series);
            m.output(o->out);
            m.output(series_meta_path(o->out));
            m.note("skipped_rows", std::to_string(parsed.skipped));
            m.note("accepted", std::to_string(stats.accepted));
            m.note("outside_region", std::to_string(stats.outside_region));
            m.note("outside_window", std::to_string(stats.outside_window));
            std::cout << "accepted " << stats.accepted << ", skipped " << parsed.skipped << ", outside region "
                      << stats.outside_region << ", outside window " << stats.outside_window << "\n";
          }};
}

Command chunk_cmd(CLI::App& root) {
  struct Opts {
    std::string input, dir;
    int t = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("chunk", "Split a series into T-frame blocks");
  app->add_option("--input", o->input, "Series (UGB)")->required();
  app->add_option("--t", o->t, "Frames per block")->required()->check(CLI::PositiveNumber);
  app->add_option("-o,--output", o->dir, "Output directory")->required();
  return {app, [o](RunManifest& m) {
            m.input(o->input);
            const auto blocks = chunk_frames(read_grid(o->input), o->t);
            fs::create_directories(o->dir);
            for (std::size_t i = 0; i < blocks.size(); ++i) {
              char name[32];
              std::snprintf(name, sizeof name, "block_%06zu.ugb", i);
              const std::string path = (fs::path(o->dir) / name).string();
              write_grid(path, blocks[i]);
              m.output(path);
            }
            m.note("blocks", std::to_string(blocks.size()));
          }};
}

Command mask_cmd(CLI::App& root) {
  struct Opts {
    std::string mode, input, config, out;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("mask", "Generate a hole mask for a block");
  app->add_option("--mode", o->mode, "random, biased or scenario")
      ->required()
      ->check(CLI::IsMember({"random", "biased", "scenario"}));
  app->add_option("--input", o->input, "Block (UGB) the mask is drawn for")->required();
  app->add_option("--config", o->config, "Mask config (key=value); scenario mode reads mask=PATH");
  app->add_option("--seed", o->seed, "Random seed");
  app->add_option("-o,--output", o->out, "Output mask (UGB u8)")->required();
  return {app, [o](RunManifest& m) {
            m.input(o->input);
            m.seed(o->seed);
            const GridBlock block = read_grid(o->input);
            KvConfig kv;
            if (!o->config.empty()) {
              m.input(o->config);
              kv = KvConfig::load(o->config);
            }
            MaskBlock mask;
            if (o->mode == "scenario") {
              fs::path src = kv.require("mask");
              if (src.is_relative()) src = fs::path(o->config).parent_path() / src;
              m.input(src.string());
              const auto sm = load_scenario_mask(src.string(), block.frames());
              if (sm.mask.rows() != block.rows() || sm.mask.cols() != block.cols())
                throw ShapeError("scenario mask grid differs from the block");
              mask = sm.mask;
            } else {
              const MaskGenConfig cfg = MaskGenConfig::from_config(kv);
              MaskRng rng(o->seed);
              mask = o->mode == "random" ? random_mask_block(block.frames(), block.rows(), block.cols(), cfg, rng)
                                         : biased_mask_block(block, cfg, rng);
            }
            write_mask(o->out, mask);
            m.output(o->out);
            m.note("hole_fraction", format_double(double(count_holes(mask)) / double(mask.size())));
          }};
}

std::vector<std::string> list_blocks(const std::string& path) {
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".ugb") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  if (files.empty()) throw FormatError("no .ugb blocks under " + path);
  return files;
}

Command train_cmd(CLI::App& root) {
  struct Opts {
    std::string data, mask_mode = "biased", width = "1", out, log, val_log, mask_config;
    int t = 5, iters = 1000, batch = 16, validate_every = 0;
    double lambda = 12.0, lr = 0.01, val_fraction = 0.05;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("train", "Train the partial-convolution U-Net");
  app->add_option("--data", o->data, "Directory of UGB blocks, or one series file")->required();
  app->add_option("--t", o->t, "Temporal dimension")->check(CLI::PositiveNumber);
  app->add_option("--mask-mode", o->mask_mode, "random or biased")->check(CLI::IsMember({"random", "biased"}));
  app->add_option("--lambda", o->lambda, "Hole-loss weight");
  app->add_option("--iters", o->iters, "Training iterations")->check(CLI::PositiveNumber);
  app->add_option("--seed", o->seed, "Seed for initialization, batches and masks");
  app->add_option("--width-scale", o->width, "Channel scale, e.g. 1/8");
  app->add_option("--batch", o->batch, "Batch size")->check(CLI::PositiveNumber);
  app->add_option("--lr", o->lr, "Initial learning rate");
  app->add_option("--validate-every", o->validate_every, "Validation period in iterations (0 = end only)");
  app->add_option("--val-fraction", o->val_fraction, "Share of trailing blocks held out for validation");
  app->add_option("--mask-config", o->mask_config, "Mask generator config (key=value)");
  app->add_option("-o,--output", o->out, "Checkpoint (UCKP)")->required();
  app->add_option("--log", o->log, "Per-iteration CSV")->required();
  app->add_option("--val-log", o->val_log, "Validation CSV (default: <log>_val.csv)");
  return {app, [o](RunManifest& m) {
            m.seed(o->seed);
            std::vector<GridBlock> blocks;
            for (const auto& f : list_blocks(o->data)) {
              m.input(f);
              const GridBlock g = read_grid(f);
              if (g.frames() < o->t) continue;
              for (auto& b : chunk_frames(g, o->t)) blocks.push_back(std::move(b));
            }
            if (blocks.empty()) throw ParameterError("no block has at least T frames");

            TrainConfig cfg;
            cfg.temporal_dim = o->t;
            cfg.mask_mode = parse_mask_mode(o->mask_mode);
            cfg.lambda_hole = o->lambda;
            cfg.batch_size = o->batch;
            cfg.lr0 = o->lr;
            cfg.max_iters = o->iters;
            cfg.validate_every = o->validate_every;
            cfg.seed = o->seed;
            std::tie(cfg.scale_num, cfg.scale_den) = parse_width_scale(o->width);
            if (!o->mask_config.empty()) {
              m.input(o->mask_config);
              cfg.masks = MaskGenConfig::from_config(KvConfig::load(o->mask_config));
            }

            if (!(o->val_fraction >= 0.0 && o->val_fraction < 1.0)) throw ParameterError("--val-fraction must be in [0, 1)");
            std::size_t n_val = 0;
            if (o->val_fraction > 0.0 && blocks.size() >= 2)
              n_val = std::max<std::size_t>(1, static_cast<std::size_t>(o->val_fraction * double(blocks.size())));
            std::vector<GridBlock> val(blocks.end() - static_cast<std::ptrdiff_t>(n_val), blocks.end());
            blocks.resize(blocks.size() - n_val);
            auto suite = make_validation_suite(val, cfg.masks, o->seed);

            Trainer trainer(cfg, std::move(blocks), std::move(val), std::move(suite));
            const std::string ckpt = o->out;
            const UNetConfig model_cfg = trainer.model().config;
            trainer.set_checkpoint_sink([ckpt, model_cfg](const std::vector<CheckpointEntry>& entries, int iter) {
              save_checkpoint(iter < 0 ? ckpt + ".nan" : ckpt, entries, model_cfg);
            });
            trainer.run();

            const std::string val_log = o->val_log.empty() ? with_suffix(o->log, "_val") : o->val_log;
            {
              auto out = open_text(o->log);
              trainer.log().write_iterations_csv(out);
            }
            {
              auto out = open_text(val_log);
              trainer.log().write_validations_csv(out);
            }
            m.output(ckpt);
            m.output(ckpt + ".cfg");
            m.output(o->log);
            m.output(val_log);
            for (const auto& v : trainer.log().validations)
              if (v.iter == trainer.iteration()) m.note("val_l1_hole/" + v.scenario, std::to_string(v.l1_hole));
          }};
}

Command impute_cmd(CLI::App& root) {
  struct Opts {
    ImputerOptions imp;
    std::string input, mask, out;
    int first_hour = 0, bin_hours = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("impute", "Fill the holes of a block (composite output)");
  add_imputer_options(app, o->imp);
  app->add_option("--input", o->input, "Block or series (UGB)")->required();
  app->add_option("--mask", o->mask, "Mask (UGB u8), 1 frame or one per input frame")->required();
  app->add_option("--first-hour", o->first_hour, "Hour of day of input frame 0 (mean baseline)");
  app->add_option("--bin-hours", o->bin_hours, "Hours per frame (mean baseline)");
  app->add_option("-o,--output", o->out, "Output block (UGB)")->required();
  return {app, [o](RunManifest& m) {
            m.input(o->input);
            m.input(o->mask);
            if (!o->imp.baseline.empty()) m.seed(o->imp.seed);
            const GridBlock input = read_grid(o->input);
            const MaskBlock mask = fit_mask(read_mask(o->mask), input);
            const int first_hour = o->first_hour, bin = o->bin_hours;
            const auto imp = make_imputer(
                o->imp, m, [first_hour, bin](int frame) { return (first_hour + frame * bin) % 24; }, bin);
            write_grid(o->out, impute_windows(imp.fn, input, mask, imp.window(input.frames())));
            m.output(o->out);
          }};
}

Command eval_cmd(CLI::App& root) {
  struct Opts {
    std::vector<std::string> preds, gts, masks;
    std::string out;
    double peak = 0.0;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("eval", "Score predictions against ground truth");
  app->add_option("--pred", o->preds, "Predicted blocks (UGB)")->required();
  app->add_option("--gt", o->gts, "Ground-truth blocks (UGB)")->required();
  app->add_option("--mask", o->masks, "Masks (UGB u8)")->required();
  app->add_option("--peak", o->peak, "Data range for SSIM/PSNR (default: ground-truth max)");
  app->add_option("-o,--output", o->out, "Metric CSV")->required();
  return {app, [o](RunManifest& m) {
            if (o->preds.size() != o->gts.size() || o->preds.size() != o->masks.size())
              throw ParameterError("--pred, --gt and --mask need the same number of files");
            std::vector<GridBlock> preds, gts;
            std::vector<MaskBlock> masks;
            for (std::size_t i = 0; i < o->preds.size(); ++i) {
              m.input(o->preds[i]);
              m.input(o->gts[i]);
              m.input(o->masks[i]);
              preds.push_back(read_grid(o->preds[i]));
              gts.push_back(read_grid(o->gts[i]));
              masks.push_back(fit_mask(read_mask(o->masks[i]), gts.back()));
            }
            const double peak = o->peak > 0.0 ? o->peak : data_peak(gts);
            if (!(peak > 0.0)) throw ParameterError("ground truth is all zero; pass --peak");
            const MetricReport report = evaluate_blocks(preds, gts, masks, peak);
            auto out = open_text(o->out);
            report.write_csv(out);
            m.output(o->out);
            m.note("peak", format_double(peak));
            m.note("mean_l1_hole", std::to_string(report.mean.l1_hole));
            m.note("mean_l2_hole", std::to_string(report.mean.l2_hole));
            m.note("mean_ssim", format_double(report.mean.ssim));
            m.note("mean_psnr", format_double(report.mean.psnr));
            std::cout << "l1_hole " << report.mean.l1_hole << "  l2_hole " << report.mean.l2_hole << "  ssim "
                      << report.mean.ssim << "  psnr " << report.mean.psnr << "\n";
          }};
}

Command scenario_cmd(CLI::App& root) {
  struct Opts {
    ImputerOptions imp;
    std::string series, spec, out;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("scenario", "Impute a static region over a period");
  add_imputer_options(app, o->imp);
  app->add_option("--series", o->series, "Test series (UGB with .meta)")->required();
  app->add_option("--scenario", o->spec, "Scenario spec (key=value)")->required();
  app->add_option("-o,--output", o->out, "CSV hour,gt_mean,pred_mean")->required();
  return {app, [o](RunManifest& m) {
            m.input(o->series);
            m.input(o->spec);
            if (!o->imp.baseline.empty()) m.seed(o->imp.seed);
            const GridSeries series = read_series(o->series);
            const ScenarioSpec spec = ScenarioSpec::load(o->spec);
            m.input(spec.mask_path);
            const auto imp = make_imputer(
                o->imp, m, [&series](int frame) { return hour_of_day(series.frame_time(frame)); }, series.bin_hours);
            const ScenarioResult result = scenario_run(imp.fn, series, spec, imp.window(spec.end_frame - spec.start_frame));
            auto out = open_text(o->out);
            result.write_csv(out);
            m.output(o->out);
            m.note("scenario", spec.name);
            m.note("mean_abs_error", format_double(result.mean_abs_error));
            std::cout << spec.name << ": mean absolute error " << result.mean_abs_error << "\n";
          }};
}

Command errmap_cmd(CLI::App& root) {
  struct Opts {
    std::vector<std::string> preds, gts, masks;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("errmap", "Aggregate signed errors per cell");
  app->add_option("--preds", o->preds, "Predicted blocks")->required();
  app->add_option("--gts", o->gts, "Ground-truth blocks")->required();
  app->add_option("--masks", o->masks, "Masks")->required();
  app->add_option("-o,--output", o->out, "map.ugb[,map.ppm]")->required();
  return {app, [o](RunManifest& m) {
            if (o->preds.size() != o->gts.size() || o->preds.size() != o->masks.size())
              throw ParameterError("--preds, --gts and --masks need the same number of files");
            std::vector<GridBlock> preds, gts;
            std::vector<MaskBlock> masks;
            for (std::size_t i = 0; i < o->preds.size(); ++i) {
              m.input(o->preds[i]);
              m.input(o->gts[i]);
              m.input(o->masks[i]);
              preds.push_back(read_grid(o->preds[i]));
              gts.push_back(read_grid(o->gts[i]));
              masks.push_back(fit_mask(read_mask(o->masks[i]), gts.back()));
            }
            const auto parts = split(o->out, ',');
            if (parts.empty() || parts.size() > 2 || parts[0].empty())
              throw ParameterError("-o expects map.ugb or map.ugb,map.ppm");
            const std::string ppm = parts.size() == 2 ? parts[1] : fs::path(parts[0]).replace_extension(".ppm").string();
            const ErrorMap map = spatial_error_map(preds, gts, masks);
            write_grid(parts[0], map.as_block());
            write_error_ppm(ppm, map);
            m.output(parts[0]);
            m.output(ppm);
          }};
}

Command gradcheck_cmd(CLI::App& root) {
  struct Opts {
    std::uint64_t seed = 0;
    double tol = 1e-4;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  app->add_option("--seed", o->seed, "Seed for the random test tensors");
  app->add_option("--tol", o->tol, "Relative error tolerance");
  app->add_option("-o,--output", o->out, "Optional CSV report");
  return {app, [o](RunManifest& m) {
            m.seed(o->seed);
            const auto reports = run_gradient_suite(o->seed, o->tol);
            bool ok = true;
            std::unique_ptr<std::ofstream> csv;
            if (!o->out.empty()) {
              csv = std::make_unique<std::ofstream>(open_text(o->out));
              *csv << "check,coordinates,max_rel_error,passed\n";
            }
            for (const auto& r : reports) {
              ok = ok && r.passed();
              std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << "  max_rel_error " << r.max_rel_error
                        << "  coords " << r.coordinates << "\n";
              if (csv) *csv << r.name << ',' << r.coordinates << ',' << r.max_rel_error << ',' << r.passed() << '\n';
            }
            if (csv) {
              csv.reset();
              m.output(o->out);
            }
            if (!ok) throw NumericError("gradient check failed");
          }};
}

}  // namespace

std::vector<Command> add_commands(CLI::App& root) {
  return {synth_cmd(root), rasterize_cmd(root), chunk_cmd(root),    mask_cmd(root),   train_cmd(root),
          impute_cmd(root), eval_cmd(root),     scenario_cmd(root), errmap_cmd(root), gradcheck_cmd(root)};
}

}  // namespace stinpaint::cli
