#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "stinpaint/masking/masking.hpp"
#include "stinpaint/nn/unet.hpp"
#include "stinpaint/tensor/checkpoint.hpp"

namespace stinpaint {

enum class MaskMode { kRandom, kBiased };

MaskMode parse_mask_mode(const std::string& text);
std::string to_string(MaskMode mode);

struct TrainConfig {
  int temporal_dim = 5;
  MaskMode mask_mode = MaskMode::kBiased;
  double lambda_hole = 12.0;
  int batch_size = 16;
  double lr0 = 0.01;
  double decay = 0.9;
  int decay_every = 500;
  int max_iters = 1000;
  int validate_every = 0;  // 0 = only at the end
  std::uint64_t seed = 0;
  int scale_num = 1;
  int scale_den = 1;
  MaskGenConfig masks;

  void validate() const;
  KvConfig to_config() const;
  static TrainConfig from_config(const KvConfig& cfg);
};

/// lr0 * decay^floor(iter / decay_every).
double lr_at(int iter, const TrainConfig& cfg);

struct IterationRecord {
  int iter = 0;
  double lr = 0.0;
  double l_total = 0.0;
  double l_hole = 0.0;
  double l_valid = 0.0;
};

struct ValidationRecord {
  int iter = 0;
  std::string scenario;
  double l1_hole = 0.0;
};

struct TrainLog {
  std::vector<IterationRecord> iterations;
  std::vector<ValidationRecord> validations;

  void write_iterations_csv(std::ostream& out) const;   // iter,lr,l_total,l_hole,l_valid
  void write_validations_csv(std::ostream& out) const;  // iter,scenario,val_l1_hole
};

/// A named, frozen set of masks, one per validation block.
struct ValidationScenario {
  std::string name;
  std::vector<MaskBlock> masks;
};

/// Frozen "random" and "biased" mask sets drawn from `seed`.
std::vector<ValidationScenario> make_validation_suite(const std::vector<GridBlock>& blocks, const MaskGenConfig& cfg,
                                                      std::uint64_t seed);

/// Pooled l1-hole of composite predictions over all blocks of one scenario.
double validate_scenario(UNetModel<float>& model, const std::vector<GridBlock>& blocks,
                         const std::vector<MaskBlock>& masks);

/// Batched evaluation-mode predictions.
std::vector<GridBlock> predict_blocks(UNetModel<float>& model, const std::vector<GridBlock>& blocks,
                                      const std::vector<MaskBlock>& masks, int batch_size = 16);

/// Self-supervised training loop. Every random choice is a function of
/// (seed, iteration, sample index), so a run resumed from a checkpoint
/// continues exactly like an uninterrupted one.
class Trainer {
 public:
  using CheckpointSink = std::function<void(const std::vector<CheckpointEntry>&, int iter)>;

  Trainer(TrainConfig cfg, std::vector<GridBlock> dataset, std::vector<GridBlock> val_blocks = {},
          std::vector<ValidationScenario> suite = {});

  /// Trains until `iteration() == target` (capped at max_iters).
  void run_until(int target);
  void run() { run_until(config_.max_iters); }

  /// Draws the batch indices and masks used at `iter`.
  std::vector<int> batch_indices(int iter) const;
  MaskBlock sample_mask(int iter, int slot, const GridBlock& block) const;

  void validate_now();

  std::vector<CheckpointEntry> checkpoint() const;
  void restore(const std::vector<CheckpointEntry>& entries);

  void set_checkpoint_sink(CheckpointSink sink) { sink_ = std::move(sink); }

  int iteration() const { return iter_; }
  const TrainLog& log() const { return log_; }
  TrainLog& log() { return log_; }
  UNetModel<float>& model() { return model_; }
  const TrainConfig& config() const { return config_; }

 private:
  const std::vector<int>& epoch_order(long long epoch) const;
  IterationRecord step();

  TrainConfig config_;
  std::vector<GridBlock> data_;
  std::vector<GridBlock> val_blocks_;
  std::vector<ValidationScenario> suite_;
  UNetModel<float> model_;
  TrainLog log_;
  int iter_ = 0;
  CheckpointSink sink_;
  mutable long long cached_epoch_ = -1;
  mutable std::vector<int> cached_order_;
};

void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries, const UNetConfig& cfg);
/// Loads a checkpoint written by save_checkpoint; the model config comes from
/// the `<path>.cfg` sidecar.
UNetModel<float> load_model(const std::string& path);

}  // namespace stinpaint
