#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "stinpaint/data/synthetic.hpp"
#include "stinpaint/eval/eval.hpp"
#include "stinpaint/train/trainer.hpp"

using namespace stinpaint;

namespace {

std::vector<GridBlock> small_dataset(int t, int days = 2) {
  SyntheticCitySpec spec = SyntheticCitySpec::default_city();
  spec.grid_h = spec.grid_w = 32;
  spec.hotspots = {{8, 10, 3, 20}, {22, 20, 2, 6}};
  spec.noise_seed = 5;
  return chunk_series(generate_synthetic(spec, days), t);
}

TrainConfig small_config(int t) {
  TrainConfig cfg;
  cfg.temporal_dim = t;
  cfg.batch_size = 4;
  cfg.max_iters = 10;
  cfg.scale_num = 1;
  cfg.scale_den = 8;
  cfg.seed = 3;
  cfg.masks.walk_steps = 80;
  return cfg;
}

}  // namespace

TEST(LearningRate, Schedule) {
  const TrainConfig cfg;
  EXPECT_DOUBLE_EQ(lr_at(0, cfg), 0.01);
  EXPECT_DOUBLE_EQ(lr_at(499, cfg), 0.01);
  EXPECT_DOUBLE_EQ(lr_at(500, cfg), 0.01 * 0.9);
  EXPECT_NEAR(lr_at(1499, cfg), 0.0081, 1e-15);
  double prev = lr_at(0, cfg);
  for (int i = 1; i < 5000; ++i) {
    const double lr = lr_at(i, cfg);
    EXPECT_LE(lr, prev);
    if (i % 500 != 0) EXPECT_EQ(lr, prev);
    prev = lr;
  }
}

TEST(TrainConfig, ValidationAndRoundTrip) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = TrainConfig{};
  cfg.lr0 = 0.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  EXPECT_THROW(parse_mask_mode("uniform"), ParameterError);
  cfg = small_config(3);
  cfg.mask_mode = MaskMode::kRandom;
  const auto back = TrainConfig::from_config(cfg.to_config());
  EXPECT_EQ(back.mask_mode, MaskMode::kRandom);
  EXPECT_EQ(back.scale_den, 8);
  EXPECT_EQ(back.masks.walk_steps, 80);
}

TEST(Trainer, MasksAreReproducibleAndFresh) {
  auto data = small_dataset(3);
  Trainer trainer(small_config(3), data);
  const auto idx = trainer.batch_indices(4);
  EXPECT_EQ(idx, trainer.batch_indices(4));
  const auto& block = data[idx[0]];
  EXPECT_TRUE(trainer.sample_mask(4, 0, block) == trainer.sample_mask(4, 0, block));
  EXPECT_FALSE(trainer.sample_mask(4, 0, block) == trainer.sample_mask(5, 0, block));
  EXPECT_FALSE(trainer.sample_mask(4, 0, block) == trainer.sample_mask(4, 1, block));
}

TEST(Trainer, EpochCoversDatasetBeforeRepeating) {
  auto data = small_dataset(3);  // 16 blocks, batch 4 -> 4 iterations per epoch
  Trainer trainer(small_config(3), data);
  std::vector<int> seen;
  for (int it = 0; it < 4; ++it)
    for (int i : trainer.batch_indices(it)) seen.push_back(i);
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 16; ++i) EXPECT_EQ(seen[i], i);
}

TEST(Trainer, DeterministicLog) {
  auto data = small_dataset(3);
  Trainer a(small_config(3), data), b(small_config(3), data);
  a.run();
  b.run();
  ASSERT_EQ(a.log().iterations.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a.log().iterations[i].l_total, b.log().iterations[i].l_total);
    EXPECT_EQ(a.log().iterations[i].iter, int(i));
  }
  EXPECT_EQ(a.model().params.value("dec6.weight").vec(), b.model().params.value("dec6.weight").vec());
}

TEST(Trainer, ResumeMatchesUninterrupted) {
  auto data = small_dataset(3);
  Trainer full(small_config(3), data);
  full.run();

  Trainer first(small_config(3), data);
  first.run_until(5);
  std::stringstream buf;
  write_uckp(buf, first.checkpoint());
  Trainer second(small_config(3), data);
  second.restore(read_uckp(buf));
  EXPECT_EQ(second.iteration(), 5);
  second.run();
  ASSERT_EQ(second.log().iterations.size(), 5u);
  for (int i = 0; i < 5; ++i)
    EXPECT_EQ(second.log().iterations[i].l_total, full.log().iterations[5 + i].l_total) << "iter " << 5 + i;
  for (const auto& name : full.model().params.parameter_names())
    EXPECT_EQ(second.model().params.value(name).vec(), full.model().params.value(name).vec()) << name;
}

TEST(Trainer, ValidationLogged) {
  auto data = small_dataset(3);
  std::vector<GridBlock> val(data.end() - 2, data.end());
  data.resize(data.size() - 2);
  auto cfg = small_config(3);
  cfg.max_iters = 4;
  cfg.validate_every = 2;
  auto suite = make_validation_suite(val, cfg.masks, 99);
  ASSERT_EQ(suite.size(), 2u);
  const auto again = make_validation_suite(val, cfg.masks, 99);
  for (std::size_t s = 0; s < suite.size(); ++s)
    for (std::size_t k = 0; k < val.size(); ++k) EXPECT_TRUE(suite[s].masks[k] == again[s].masks[k]);
  Trainer trainer(cfg, data, val, suite);
  int checkpoints = 0;
  trainer.set_checkpoint_sink([&](const std::vector<CheckpointEntry>&, int) { ++checkpoints; });
  trainer.run();
  EXPECT_EQ(trainer.log().validations.size(), 4u);  // two scenarios at iters 2 and 4
  EXPECT_GE(checkpoints, 2);
  std::ostringstream csv;
  trainer.log().write_validations_csv(csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "iter,scenario,val_l1_hole");
}

TEST(Validation, OracleScoresZero) {
  auto data = small_dataset(3, 1);
  MaskRng rng(1);
  for (const auto& b : data) {
    const MaskBlock m = random_mask_block(3, 32, 32, MaskGenConfig{}, rng);
    EXPECT_EQ(l1_hole(composite(b, m, b), b, m), 0.0);
  }
}

TEST(Validation, ZeroPredictorScoresHoleMean) {
  auto data = small_dataset(3, 1);
  data.resize(3);
  auto model = build_unet<float>(UNetConfig::standard(3, 32, 32, 1, 8), 0);
  for (const auto& name : model.params.parameter_names()) model.params.value(name).vec().setZero();
  MaskRng rng(2);
  std::vector<MaskBlock> masks;
  double hole_sum = 0.0;
  long long holes = 0;
  for (const auto& b : data) {
    masks.push_back(random_mask_block(3, 32, 32, MaskGenConfig{}, rng));
    for (Eigen::Index i = 0; i < b.size(); ++i)
      if (masks.back().values()[i] == 0) {
        hole_sum += b.values()[i];
        ++holes;
      }
  }
  EXPECT_NEAR(validate_scenario(model, data, masks), hole_sum / double(holes), 1e-9);
}

TEST(Trainer, LossDescendsOnRepeatedBatch) {
  auto data = small_dataset(3, 1);
  data.resize(4);  // batch 4 covers everything, so every iteration sees the same blocks
  auto cfg = small_config(3);
  cfg.max_iters = 50;
  Trainer trainer(cfg, data);
  trainer.run();
  const auto& it = trainer.log().iterations;
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 5; ++i) {
    head += it[i].l_total;
    tail += it[45 + i].l_total;
  }
  EXPECT_LT(tail, head);
}

TEST(Checkpointing, SaveAndLoadModel) {
  auto data = small_dataset(3, 1);
  auto cfg = small_config(3);
  cfg.max_iters = 2;
  Trainer trainer(cfg, data);
  trainer.run();
  const auto dir = std::filesystem::temp_directory_path() / "stinpaint_unit_train";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "model.uckp").string();
  save_checkpoint(path, trainer.checkpoint(), trainer.model().config);
  auto loaded = load_model(path);
  MaskBlock mask(3, 32, 32, 1);
  mask.frame(0).block(3, 3, 9, 9).setZero();
  EXPECT_TRUE(unet_predict(loaded, data[0], mask) == unet_predict(trainer.model(), data[0], mask));
}
