#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "stinpaint/data/synthetic.hpp"
#include "stinpaint/data/ugb_io.hpp"

using namespace stinpaint;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "stinpaint_unit_data";
  std::filesystem::create_directories(dir);
  return dir;
}

RegionSpec unit_region() {
  RegionSpec r;
  r.lon_min = 0.0;
  r.lon_max = 64.0;
  r.lat_min = 0.0;
  r.lat_max = 64.0;
  return r;
}

}  // namespace

TEST(WallTime, ParsesWithAndWithoutSeconds) {
  EXPECT_EQ(format_wall_time(parse_wall_time("2016-02-01T08:15:00")), "2016-02-01T08:15:00");
  EXPECT_EQ(format_wall_time(parse_wall_time("2016-02-01 08:15")), "2016-02-01T08:15:00");
  EXPECT_EQ(hour_of_day(parse_wall_time("2016-02-01T23:59:59")), 23);
  EXPECT_THROW(parse_wall_time("2016-02-30T00:00"), FormatError);
  EXPECT_THROW(parse_wall_time("yesterday"), FormatError);
}

TEST(ParseEvents, SingleRecord) {
  std::istringstream in("timestamp,lon,lat\n2016-02-01T08:15:00,-73.98,40.75");
  const auto parsed = parse_events(in);
  ASSERT_EQ(parsed.records.size(), 1u);
  EXPECT_EQ(parsed.skipped, 0u);
  EXPECT_EQ(hour_of_day(parsed.records[0].timestamp), 8);
  EXPECT_DOUBLE_EQ(parsed.records[0].lon, -73.98);
  EXPECT_DOUBLE_EQ(parsed.records[0].lat, 40.75);
}

TEST(ParseEvents, EmptyBody) {
  std::istringstream in("timestamp,lon,lat\n");
  const auto parsed = parse_events(in);
  EXPECT_TRUE(parsed.records.empty());
  EXPECT_EQ(parsed.skipped, 0u);
}

TEST(ParseEvents, BadRowsAreSkippedAndCounted) {
  std::istringstream in(
      "timestamp,lon,lat\n2016-02-01T08:15:00,abc,40.75\n2016-02-01T09:00:00,1,2\nnot-a-row\n"
      "2016-13-01T00:00:00,1,2\n");
  const auto parsed = parse_events(in);
  EXPECT_EQ(parsed.records.size(), 1u);
  EXPECT_EQ(parsed.skipped, 3u);
}

TEST(ParseEvents, HeaderIsRequired) {
  std::istringstream missing("");
  EXPECT_THROW(parse_events(missing), IngestError);
  std::istringstream wrong("time,x,y\n2016-02-01T08:15:00,1,2\n");
  EXPECT_THROW(parse_events(wrong), IngestError);
}

TEST(Rasterize, NorthUpConvention) {
  const WallTime start = parse_wall_time("2016-01-01T00:00");
  const std::vector<EventRecord> events{{start + std::chrono::minutes(3 * 60 + 20), 10.5, 20.5}};
  const auto s = rasterize(events, unit_region(), start, 5);
  EXPECT_EQ(s.frames(3, 43, 10), 1.0f);
  EXPECT_EQ(s.frames.values().sum(), 1.0f);
}

TEST(Rasterize, DuplicatesAccumulate) {
  const WallTime start = parse_wall_time("2016-01-01T00:00");
  const EventRecord e{start + std::chrono::minutes(5), 1.5, 1.5};
  const auto s = rasterize({e, e}, unit_region(), start, 1);
  EXPECT_EQ(s.frames(0, 62, 1), 2.0f);
}

TEST(Rasterize, HalfOpenBoundariesAndWindow) {
  const WallTime start = parse_wall_time("2016-01-01T00:00");
  const std::vector<EventRecord> events{
      {start, 64.0, 10.0},                          // on lon_max: outside
      {start, 0.0, 10.0},                           // on lon_min: inside, col 0
      {start, 5.0, 0.0},                            // on lat_min: outside
      {start, 5.0, 64.0},                           // on lat_max: inside, row 0
      {start - std::chrono::seconds(1), 5.0, 5.0},  // before window
      {start + std::chrono::hours(2), 5.0, 5.0},    // after window
  };
  RasterStats stats;
  const auto s = rasterize(events, unit_region(), start, 2, &stats);
  EXPECT_EQ(stats.accepted, 2u);
  EXPECT_EQ(stats.outside_region, 2u);
  EXPECT_EQ(stats.outside_window, 2u);
  EXPECT_EQ(s.frames(0, 54, 0), 1.0f);
  EXPECT_EQ(s.frames(0, 0, 5), 1.0f);
}

TEST(Rasterize, ConservesMassPerFrame) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coord(-8.0, 72.0);
  std::uniform_int_distribution<int> minute(0, 6 * 60 - 1);
  const WallTime start = parse_wall_time("2016-03-01T00:00");
  std::vector<EventRecord> events;
  std::vector<double> expected(6, 0.0);
  for (int i = 0; i < 5000; ++i) {
    EventRecord e{start + std::chrono::minutes(minute(rng)), coord(rng), coord(rng)};
    if (e.lon >= 0.0 && e.lon < 64.0 && e.lat > 0.0 && e.lat <= 64.0)
      expected[static_cast<std::size_t>((e.timestamp - start) / std::chrono::hours(1))] += 1.0;
    events.push_back(e);
  }
  const auto s = rasterize(events, unit_region(), start, 6);
  for (int t = 0; t < 6; ++t) EXPECT_EQ(double(s.frames.frame(t).sum()), expected[t]);
}

TEST(Rasterize, MultiHourBins) {
  RegionSpec r = unit_region();
  r.bin_hours = 3;
  const WallTime start = parse_wall_time("2016-01-01T00:00");
  const auto s = rasterize({{start + std::chrono::hours(4), 1.0, 1.0}}, r, start, 2);
  EXPECT_EQ(s.frames(1, 63, 1), 1.0f);
  EXPECT_EQ(hour_of_day(s.frame_time(1)), 3);
}

TEST(RegionSpec, RejectsInvertedBounds) {
  RegionSpec r = unit_region();
  r.lon_max = -1.0;
  EXPECT_THROW(r.validate(), ParameterError);
}

TEST(Chunk, HalfYearHourlyCount) {
  GridSeries s{GridBlock(30648, 1, 1), {}, 1};
  for (int t = 0; t < 30648; ++t) s.frames(t, 0, 0) = float(t);
  const auto blocks = chunk_series(s, 5);
  ASSERT_EQ(blocks.size(), 6129u);
  EXPECT_EQ(blocks.back()(4, 0, 0), 30644.0f);  // frames 30645..30647 dropped
}

TEST(Chunk, EdgeCases) {
  GridSeries ten{GridBlock(10, 2, 2), {}, 1};
  EXPECT_EQ(chunk_series(ten, 1).size(), 10u);
  GridSeries four{GridBlock(4, 2, 2), {}, 1};
  EXPECT_TRUE(chunk_series(four, 5).empty());
}

TEST(Chunk, BlocksPartitionAPrefix) {
  GridBlock frames(11, 3, 2);
  for (Eigen::Index i = 0; i < frames.size(); ++i) frames.values()[i] = float(i);
  const auto blocks = chunk_frames(frames, 3);
  ASSERT_EQ(blocks.size(), 3u);
  Eigen::Index k = 0;
  for (const auto& b : blocks)
    for (Eigen::Index i = 0; i < b.size(); ++i) EXPECT_EQ(b.values()[i], frames.values()[k++]);
}

TEST(Synthetic, Deterministic) {
  auto spec = SyntheticCitySpec::default_city();
  spec.noise_seed = 11;
  EXPECT_TRUE(generate_synthetic(spec, 2).frames == generate_synthetic(spec, 2).frames);
  spec.noise_seed = 12;
  EXPECT_FALSE(generate_synthetic(spec, 1).frames == generate_synthetic(SyntheticCitySpec::default_city(), 1).frames);
}

TEST(Synthetic, IntensityFormula) {
  SyntheticCitySpec spec;
  spec.grid_h = spec.grid_w = 8;
  spec.hotspots = {{2.0, 3.0, 1.5, 10.0}};
  spec.diurnal_amplitude = 0.5;
  const double d2 = 1.0 + 4.0;
  const double expected = 10.0 * std::exp(-d2 / (2.0 * 1.5 * 1.5)) * (1.0 + 0.5 * std::sin(2.0 * M_PI * 6 / 24.0));
  EXPECT_NEAR(spec.intensity(0, 6, 3, 5), expected, 1e-12);
}

TEST(Synthetic, ZeroMultiplierSilencesAnomalyDay) {
  auto spec = SyntheticCitySpec::default_city();
  AnomalyDay a{1, {}, 0.0};
  for (int r = 10; r < 25; ++r)
    for (int c = 14; c < 30; ++c) a.cells.emplace_back(r, c);
  spec.anomaly_days.push_back(a);
  const auto s = generate_synthetic(spec, 3);
  for (int h = 0; h < 24; ++h)
    for (const auto& [r, c] : a.cells) ASSERT_EQ(s.frames(24 + h, r, c), 0.0f);
  EXPECT_GT(s.frames.frame(0).block(10, 14, 15, 16).sum(), 0.0f);
}

TEST(Synthetic, MonteCarloMeanMatchesIntensity) {
  SyntheticCitySpec spec;
  spec.grid_h = spec.grid_w = 4;
  spec.hotspots = {{1.0, 2.0, 1.2, 6.0}};
  spec.diurnal_amplitude = 0.4;
  spec.noise_seed = 3;
  const int days = 2000;
  const auto s = generate_synthetic(spec, days);
  for (int h : {0, 6, 18})
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        double sum = 0.0;
        for (int d = 0; d < days; ++d) sum += s.frames(d * 24 + h, r, c);
        const double lambda = spec.intensity(0, h, r, c);
        const double se = std::sqrt(lambda / days);
        EXPECT_NEAR(sum / days, lambda, 3.0 * se + 1e-12) << "h=" << h << " r=" << r << " c=" << c;
      }
}

TEST(Synthetic, ConfigRoundTrip) {
  auto spec = SyntheticCitySpec::default_city();
  spec.noise_seed = 99;
  spec.anomaly_days.push_back({2, {{1, 1}, {1, 2}}, 3.5});
  const auto back = SyntheticCitySpec::from_config(spec.to_config());
  EXPECT_TRUE(generate_synthetic(back, 3).frames == generate_synthetic(spec, 3).frames);
}

TEST(Synthetic, ValidatesSpec) {
  auto spec = SyntheticCitySpec::default_city();
  spec.hotspots[0].peak_rate = -1.0;
  EXPECT_THROW(generate_synthetic(spec, 1), ParameterError);
  EXPECT_THROW(generate_synthetic(SyntheticCitySpec::default_city(), 0), ParameterError);
}

TEST(Ugb, HeaderBytes) {
  std::ostringstream out;
  write_ugb(out, GridBlock(2, 3, 4));
  const std::string bytes = out.str();
  const unsigned char expected[] = {0x55, 0x47, 0x42, 0x31, 0x01, 0x00, 0x03, 0x02, 0x00, 0x00,
                                    0x00, 0x03, 0x00, 0x00, 0x00, 0x04, 0x00, 0x00, 0x00};
  ASSERT_EQ(bytes.size(), sizeof expected + 2 * 3 * 4 * 4);
  for (std::size_t i = 0; i < sizeof expected; ++i) EXPECT_EQ(static_cast<unsigned char>(bytes[i]), expected[i]) << i;
}

TEST(Ugb, RoundTripBothDtypes) {
  GridBlock g(3, 5, 7);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-100.0f, 100.0f);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.values()[i] = u(rng);
  MaskBlock m(2, 4, 4, 1);
  m(1, 2, 3) = 0;
  std::stringstream a, b;
  write_ugb(a, g);
  write_ugb(b, m);
  EXPECT_TRUE(std::get<GridBlock>(read_ugb(a)) == g);
  EXPECT_TRUE(std::get<MaskBlock>(read_ugb(b)) == m);
}

TEST(Ugb, RejectsBadFiles) {
  std::ostringstream good;
  write_ugb(good, GridBlock(1, 2, 2));
  std::string bytes = good.str();

  std::string magic = bytes;
  magic.replace(0, 4, "XXXX");
  std::istringstream m(magic);
  EXPECT_THROW(read_ugb(m), FormatError);

  std::istringstream truncated(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_ugb(truncated), FormatError);

  std::string huge = bytes;
  for (int i = 7; i < 19; ++i) huge[i] = static_cast<char>(0xff);
  std::istringstream h(huge);
  EXPECT_THROW(read_ugb(h), FormatError);

  std::string dtype = bytes;
  dtype[5] = 7;
  std::istringstream d(dtype);
  EXPECT_THROW(read_ugb(d), FormatError);
}

TEST(Ugb, MaskFilesMustBeBinary) {
  const auto path = (scratch_dir() / "nonbinary.ugb").string();
  MaskBlock m(1, 2, 2, 1);
  m(0, 1, 1) = 2;
  write_mask(path, m);
  EXPECT_THROW(read_mask(path), FormatError);
}

TEST(Ugb, SeriesRoundTripKeepsTime) {
  const auto path = (scratch_dir() / "series.ugb").string();
  GridSeries s{GridBlock(5, 2, 3, 1.5f), parse_wall_time("2016-04-02T05:00"), 2};
  write_series(path, s);
  const auto back = read_series(path);
  EXPECT_TRUE(back.frames == s.frames);
  EXPECT_EQ(back.start_time, s.start_time);
  EXPECT_EQ(back.bin_hours, 2);
}
