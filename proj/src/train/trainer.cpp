#include "stinpaint/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "stinpaint/nn/loss.hpp"

namespace stinpaint {
namespace {

// Stream tags keep the independent random streams apart.
constexpr std::uint64_t kEpochStream = 0x45504f43ULL;
constexpr std::uint64_t kMaskStream = 0x4d41534bULL;
constexpr std::uint64_t kValidationStream = 0x56414c49ULL;

void write_double(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out << buf;
}

}  // namespace

MaskMode parse_mask_mode(const std::string& text) {
  if (text == "random") return MaskMode::kRandom;
  if (text == "biased") return MaskMode::kBiased;
  throw ParameterError("mask mode must be random or biased, got '" + text + "'");
}

std::string to_string(MaskMode mode) { return mode == MaskMode::kRandom ? "random" : "biased"; }

void TrainConfig::validate() const {
  if (temporal_dim < 1) throw ParameterError("T must be >= 1");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw ParameterError("lr0 must be > 0");
  if (!(decay > 0.0)) throw ParameterError("decay must be > 0");
  if (decay_every < 1) throw ParameterError("decay_every must be >= 1");
  if (max_iters < 0) throw ParameterError("max_iters must be >= 0");
  if (lambda_hole < 0.0) throw ParameterError("lambda must be >= 0");
  if (validate_every < 0) throw ParameterError("validate_every must be >= 0");
  masks.validate();
}

KvConfig TrainConfig::to_config() const {
  KvConfig cfg;
  cfg.add("temporal_dim", std::to_string(temporal_dim));
  cfg.add("mask_mode", to_string(mask_mode));
  cfg.add("lambda", format_double(lambda_hole));
  cfg.add("batch_size", std::to_string(batch_size));
  cfg.add("lr0", format_double(lr0));
  cfg.add("decay", format_double(decay));
  cfg.add("decay_every", std::to_string(decay_every));
  cfg.add("max_iters", std::to_string(max_iters));
  cfg.add("validate_every", std::to_string(validate_every));
  cfg.add("seed", std::to_string(seed));
  cfg.add("width_scale", std::to_string(scale_num) + "/" + std::to_string(scale_den));
  const KvConfig mask_cfg = masks.to_config();
  for (const auto& [k, v] : mask_cfg.entries()) cfg.add("mask." + k, v);
  return cfg;
}

TrainConfig TrainConfig::from_config(const KvConfig& cfg) {
  TrainConfig t;
  t.temporal_dim = static_cast<int>(cfg.get_int("temporal_dim", t.temporal_dim));
  t.mask_mode = parse_mask_mode(cfg.get_string("mask_mode", to_string(t.mask_mode)));
  t.lambda_hole = cfg.get_double("lambda", t.lambda_hole);
  t.batch_size = static_cast<int>(cfg.get_int("batch_size", t.batch_size));
  t.lr0 = cfg.get_double("lr0", t.lr0);
  t.decay = cfg.get_double("decay", t.decay);
  t.decay_every = static_cast<int>(cfg.get_int("decay_every", t.decay_every));
  t.max_iters = static_cast<int>(cfg.get_int("max_iters", t.max_iters));
  t.validate_every = static_cast<int>(cfg.get_int("validate_every", t.validate_every));
  t.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  std::tie(t.scale_num, t.scale_den) = parse_width_scale(cfg.get_string("width_scale", "1"));
  KvConfig mask_cfg;
  for (const auto& [k, v] : cfg.entries())
    if (k.rfind("mask.", 0) == 0) mask_cfg.add(k.substr(5), v);
  t.masks = MaskGenConfig::from_config(mask_cfg);
  t.validate();
  return t;
}

double lr_at(int iter, const TrainConfig& cfg) {
  if (iter < 0) throw ParameterError("lr_at: iteration must be >= 0");
  return cfg.lr0 * std::pow(cfg.decay, double(iter / cfg.decay_every));
}

void TrainLog::write_iterations_csv(std::ostream& out) const {
  out << "iter,lr,l_total,l_hole,l_valid\n";
  for (const auto& r : iterations) {
    out << r.iter << ',';
    write_double(out, r.lr);
    out << ',';
    write_double(out, r.l_total);
    out << ',';
    write_double(out, r.l_hole);
    out << ',';
    write_double(out, r.l_valid);
    out << '\n';
  }
}

void TrainLog::write_validations_csv(std::ostream& out) const {
  out << "iter,scenario,val_l1_hole\n";
  for (const auto& r : validations) {
    out << r.iter << ',' << r.scenario << ',';
    write_double(out, r.l1_hole);
    out << '\n';
  }
}

std::vector<ValidationScenario> make_validation_suite(const std::vector<GridBlock>& blocks, const MaskGenConfig& cfg,
                                                      std::uint64_t seed) {
  ValidationScenario random{"random", {}};
  ValidationScenario biased{"biased", {}};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    auto r1 = indexed_rng(seed, kValidationStream, i, 0);
    random.masks.push_back(random_mask_block(b.frames(), b.rows(), b.cols(), cfg, r1));
    auto r2 = indexed_rng(seed, kValidationStream, i, 1);
    biased.masks.push_back(biased_mask_block(b, cfg, r2));
  }
  return {std::move(random), std::move(biased)};
}

std::vector<GridBlock> predict_blocks(UNetModel<float>& model, const std::vector<GridBlock>& blocks,
                                      const std::vector<MaskBlock>& masks, int batch_size) {
  if (blocks.size() != masks.size()) throw ShapeError("predict_blocks: block and mask counts differ");
  std::vector<GridBlock> out;
  for (std::size_t first = 0; first < blocks.size(); first += static_cast<std::size_t>(batch_size)) {
    const std::size_t last = std::min(blocks.size(), first + static_cast<std::size_t>(batch_size));
    std::vector<const GridBlock*> bp;
    std::vector<const MaskBlock*> mp;
    for (std::size_t i = first; i < last; ++i) {
      bp.push_back(&blocks[i]);
      mp.push_back(&masks[i]);
    }
    Tape<float> tape;
    const BoundParams<float> params(tape, model.params, false);
    const auto res = unet_forward(tape, model, params, stack_blocks(bp), stack_masks(mp), false);
    for (std::size_t i = first; i < last; ++i)
      out.push_back(unstack_block(tape.value(res.prediction), static_cast<int>(i - first)));
  }
  return out;
}

double validate_scenario(UNetModel<float>& model, const std::vector<GridBlock>& blocks,
                         const std::vector<MaskBlock>& masks) {
  const auto preds = predict_blocks(model, blocks, masks);
  double abs_sum = 0.0;
  double holes = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const GridBlock imputed = composite(blocks[i], masks[i], preds[i]);
    for (Eigen::Index k = 0; k < imputed.size(); ++k) {
      if (masks[i].values()[k]) continue;
      abs_sum += std::abs(double(imputed.values()[k]) - double(blocks[i].values()[k]));
      holes += 1.0;
    }
  }
  if (holes == 0.0) throw UndefinedMetricError("validation masks contain no holes");
  return abs_sum / holes;
}

Trainer::Trainer(TrainConfig cfg, std::vector<GridBlock> dataset, std::vector<GridBlock> val_blocks,
                 std::vector<ValidationScenario> suite)
    : config_(std::move(cfg)), data_(std::move(dataset)), val_blocks_(std::move(val_blocks)), suite_(std::move(suite)) {
  config_.validate();
  if (data_.empty()) throw ParameterError("training set is empty");
  for (const auto& b : data_)
    if (!b.same_shape(data_.front())) throw ShapeError("training blocks differ in shape");
  if (data_.front().frames() != config_.temporal_dim) throw ShapeError("training blocks do not have T frames");
  for (const auto& s : suite_)
    if (s.masks.size() != val_blocks_.size()) throw ShapeError("validation scenario '" + s.name + "' size mismatch");
  const auto& f = data_.front();
  model_ = build_unet<float>(UNetConfig::standard(config_.temporal_dim, f.rows(), f.cols(), config_.scale_num,
                                                  config_.scale_den),
                             config_.seed);
}

const std::vector<int>& Trainer::epoch_order(long long epoch) const {
  if (epoch != cached_epoch_) {
    cached_order_.resize(data_.size());
    std::iota(cached_order_.begin(), cached_order_.end(), 0);
    auto rng = indexed_rng(config_.seed, kEpochStream, static_cast<std::uint64_t>(epoch));
    std::shuffle(cached_order_.begin(), cached_order_.end(), rng);
    cached_epoch_ = epoch;
  }
  return cached_order_;
}

std::vector<int> Trainer::batch_indices(int iter) const {
  std::vector<int> out;
  const long long n = static_cast<long long>(data_.size());
  for (int j = 0; j < config_.batch_size; ++j) {
    const long long k = static_cast<long long>(iter) * config_.batch_size + j;
    out.push_back(epoch_order(k / n)[static_cast<std::size_t>(k % n)]);
  }
  return out;
}

MaskBlock Trainer::sample_mask(int iter, int slot, const GridBlock& block) const {
  auto rng = indexed_rng(config_.seed, kMaskStream, static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(slot));
  if (config_.mask_mode == MaskMode::kBiased) return biased_mask_block(block, config_.masks, rng);
  return random_mask_block(block.frames(), block.rows(), block.cols(), config_.masks, rng);
}

IterationRecord Trainer::step() {
  const int iter = iter_;
  const auto idx = batch_indices(iter);
  std::vector<MaskBlock> masks;
  std::vector<const GridBlock*> bp;
  std::vector<const MaskBlock*> mp;
  masks.reserve(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) masks.push_back(sample_mask(iter, static_cast<int>(j), data_[idx[j]]));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    bp.push_back(&data_[idx[j]]);
    mp.push_back(&masks[j]);
  }
  const Tensor<float> image = stack_blocks(bp);
  const Tensor<float> mask = stack_masks(mp);

  Tape<float> tape;
  const BoundParams<float> params(tape, model_.params);
  const auto out = unet_forward(tape, model_, params, image, mask, true);
  const auto loss = inpainting_loss(tape, out.prediction, image, mask, static_cast<float>(config_.lambda_hole));

  IterationRecord rec;
  rec.iter = iter;
  rec.lr = lr_at(iter, config_);
  rec.l_total = tape.value(loss.total).item();
  rec.l_hole = tape.value(loss.hole).item();
  rec.l_valid = tape.value(loss.valid).item();
  if (!std::isfinite(rec.l_total)) {
    if (sink_) sink_(checkpoint(), -1);
    throw NumericError("non-finite loss at iteration " + std::to_string(iter));
  }
  tape.backward(loss.total);
  adam_step(model_.params, params.gradients(), rec.lr);
  ++iter_;
  return rec;
}

void Trainer::validate_now() {
  for (const auto& s : suite_)
    log_.validations.push_back({iter_, s.name, validate_scenario(model_, val_blocks_, s.masks)});
}

void Trainer::run_until(int target) {
  target = std::min(target, config_.max_iters);
  while (iter_ < target) {
    log_.iterations.push_back(step());
    const bool at_end = iter_ == config_.max_iters;
    const bool periodic = config_.validate_every > 0 && iter_ % config_.validate_every == 0;
    if (periodic || at_end) {
      if (!suite_.empty()) validate_now();
      if (sink_) sink_(checkpoint(), iter_);
    }
  }
}

std::vector<CheckpointEntry> Trainer::checkpoint() const {
  auto entries = store_to_entries(model_.params);
  entries.push_back(scalar_entry("meta/iter", static_cast<float>(iter_)));
  return entries;
}

void Trainer::restore(const std::vector<CheckpointEntry>& entries) {
  entries_to_store(entries, model_.params);
  const auto* it = find_entry(entries, "meta/iter");
  if (!it) throw FormatError("checkpoint missing meta/iter");
  iter_ = static_cast<int>(it->values.at(0));
}

void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries, const UNetConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint " + path);
  write_uckp(out, entries);
  if (!out) throw FormatError("write failed: " + path);
  cfg.to_config().save(path + ".cfg");
}

UNetModel<float> load_model(const std::string& path) {
  const auto cfg = UNetConfig::from_config(KvConfig::load(path + ".cfg"));
  auto model = build_unet<float>(cfg, 0);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  entries_to_store(read_uckp(in), model.params);
  return model;
}

}  // namespace stinpaint
