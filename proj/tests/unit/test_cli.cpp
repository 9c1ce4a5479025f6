#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "stinpaint/data/ugb_io.hpp"

using namespace stinpaint;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  auto dir = fs::temp_directory_path() / "stinpaint_unit_cli";
  fs::create_directories(dir);
  return dir;
}

std::string at(const std::string& name) { return (work_dir() / name).string(); }

int cli(const std::string& args) {
  const std::string cmd = std::string(STINPAINT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, SynthWritesDaysTimes24Frames) {
  ASSERT_EQ(cli("synth --days 4 --seed 7 -o " + at("city.ugb")), 0);
  const auto s = read_series(at("city.ugb"));
  EXPECT_EQ(s.frames.frames(), 96);
  EXPECT_EQ(s.frames.rows(), 64);
  EXPECT_EQ(s.frames.cols(), 64);
  const auto manifest = nlohmann::json::parse(slurp(at("city.ugb") + ".manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "synth");
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["outputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST(Cli, ImputeWithAllValidMaskIsIdentity) {
  GridBlock block(3, 16, 16);
  for (Eigen::Index i = 0; i < block.size(); ++i) block.values()[i] = float((i * 13) % 29) * 0.25f;
  write_grid(at("block.ugb"), block);
  write_mask(at("ones.ugb"), MaskBlock(1, 16, 16, 1));
  for (const std::string baseline : {"nn2", "nn3", "rbf2"}) {
    ASSERT_EQ(cli("impute --baseline " + baseline + " --input " + at("block.ugb") + " --mask " + at("ones.ugb") +
                  " -o " + at("same.ugb")),
              0)
        << baseline;
    EXPECT_EQ(slurp(at("same.ugb")).substr(19), slurp(at("block.ugb")).substr(19)) << baseline;
  }
}

TEST(Cli, ChunkMaskAndEvalPipeline) {
  ASSERT_EQ(cli("synth --days 1 --seed 3 -o " + at("day.ugb")), 0);
  ASSERT_EQ(cli("chunk --input " + at("day.ugb") + " --t 3 -o " + at("blocks")), 0);
  EXPECT_EQ(std::distance(fs::directory_iterator(work_dir() / "blocks"), fs::directory_iterator{}), 8 + 1);
  const std::string block = at("blocks/block_000002.ugb");
  ASSERT_EQ(cli("mask --mode biased --seed 1 --input " + block + " -o " + at("m.ugb")), 0);
  ASSERT_EQ(cli("impute --baseline nn3 --input " + block + " --mask " + at("m.ugb") + " -o " + at("p.ugb")), 0);
  ASSERT_EQ(cli("eval --pred " + at("p.ugb") + " --gt " + block + " --mask " + at("m.ugb") + " -o " + at("m.csv")), 0);
  EXPECT_EQ(slurp(at("m.csv")).rfind("block_index,l1_hole,l2_hole,ssim,psnr\n", 0), 0u);
}

TEST(Cli, TrainIsDeterministic) {
  ASSERT_EQ(cli("synth --days 2 --seed 5 -o " + at("train.ugb")), 0);
  const std::string common = "--threads 1 train --data " + at("train.ugb") +
                             " --t 3 --iters 3 --batch 2 --width-scale 1/8 --seed 4 ";
  ASSERT_EQ(cli(common + "-o " + at("a.uckp") + " --log " + at("a.csv")), 0);
  ASSERT_EQ(cli(common + "-o " + at("b.uckp") + " --log " + at("b.csv")), 0);
  EXPECT_EQ(slurp(at("a.uckp")), slurp(at("b.uckp")));
  EXPECT_EQ(slurp(at("a.csv")), slurp(at("b.csv")));
  EXPECT_EQ(slurp(at("a.uckp") + ".cfg"), slurp(at("b.uckp") + ".cfg"));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli(""), 1);
  EXPECT_EQ(cli("synth --days 0 -o " + at("x.ugb")), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("impute --baseline nn2 --input " + at("missing.ugb") + " --mask " + at("ones.ugb") + " -o " +
                at("y.ugb")),
            2);
  {
    std::ofstream bad(at("garbage.ugb"), std::ios::binary);
    bad << "NOPE";
  }
  EXPECT_EQ(cli("chunk --input " + at("garbage.ugb") + " --t 2 -o " + at("g")), 2);
  EXPECT_EQ(cli("gradcheck --tol 1e-300"), 3);
  EXPECT_EQ(cli("gradcheck"), 0);
}
