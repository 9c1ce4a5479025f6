#include "stinpaint/data/ugb_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "stinpaint/common/kv_config.hpp"

namespace stinpaint {
namespace {

static_assert(std::endian::native == std::endian::little, "UGB I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'U', 'G', 'B', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

template <typename Scalar>
void write_header(std::ostream& out, const Volume<Scalar>& v, UgbDtype dtype) {
  out.write(kMagic.data(), 4);
  const unsigned char meta[3] = {kUgbVersion, static_cast<unsigned char>(dtype), 3};
  out.write(reinterpret_cast<const char*>(meta), 3);
  put_u32(out, static_cast<std::uint32_t>(v.frames()));
  put_u32(out, static_cast<std::uint32_t>(v.rows()));
  put_u32(out, static_cast<std::uint32_t>(v.cols()));
}

void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError(std::string("UGB truncated ") + what);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  return out;
}

}  // namespace

void write_ugb(std::ostream& out, const GridBlock& block) {
  write_header(out, block, UgbDtype::F32);
  out.write(reinterpret_cast<const char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(float)));
}

void write_ugb(std::ostream& out, const MaskBlock& mask) {
  write_header(out, mask, UgbDtype::U8);
  out.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
}

void write_grid(const std::string& path, const GridBlock& block) {
  auto out = open_out(path);
  write_ugb(out, block);
  if (!out) throw FormatError("write failed: " + path);
}

void write_mask(const std::string& path, const MaskBlock& mask) {
  auto out = open_out(path);
  write_ugb(out, mask);
  if (!out) throw FormatError("write failed: " + path);
}

UgbVolume read_ugb(std::istream& in) {
  std::array<char, 4> magic{};
  read_exact(in, magic.data(), 4, "header");
  if (magic != kMagic) throw FormatError("UGB bad magic");
  unsigned char meta[3];
  read_exact(in, meta, 3, "header");
  if (meta[0] != kUgbVersion) throw FormatError("UGB unsupported version " + std::to_string(meta[0]));
  if (meta[1] > 1) throw FormatError("UGB unknown dtype " + std::to_string(meta[1]));
  if (meta[2] != 3) throw FormatError("UGB ndim must be 3");
  unsigned char raw[12];
  read_exact(in, raw, 12, "dims");
  std::array<std::uint32_t, 3> dims{};
  for (int i = 0; i < 3; ++i) {
    dims[i] = std::uint32_t(raw[4 * i]) | std::uint32_t(raw[4 * i + 1]) << 8 | std::uint32_t(raw[4 * i + 2]) << 16 |
              std::uint32_t(raw[4 * i + 3]) << 24;
    if (dims[i] == 0 || dims[i] > std::uint32_t(std::numeric_limits<int>::max()))
      throw FormatError("UGB dimension out of range");
  }
  const std::uint64_t count = std::uint64_t(dims[0]) * dims[1] * dims[2];
  const std::uint64_t elem = meta[1] == 0 ? 4 : 1;
  // 2^31 elements is far beyond any grid this library handles.
  if (dims[1] * std::uint64_t(dims[2]) > std::uint64_t(std::numeric_limits<int>::max()) ||
      count > (std::uint64_t(1) << 31) / elem)
    throw FormatError("UGB dimension overflow");

  if (static_cast<UgbDtype>(meta[1]) == UgbDtype::F32) {
    GridBlock g{int(dims[0]), int(dims[1]), int(dims[2])};
    read_exact(in, g.data(), count * 4, "payload");
    return g;
  }
  MaskBlock m{int(dims[0]), int(dims[1]), int(dims[2])};
  read_exact(in, m.data(), count, "payload");
  return m;
}

UgbVolume read_ugb(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return read_ugb(in);
}

GridBlock read_grid(const std::string& path) {
  auto v = read_ugb(path);
  if (auto* g = std::get_if<GridBlock>(&v)) return std::move(*g);
  const auto& m = std::get<MaskBlock>(v);
  GridBlock g(m.frames(), m.rows(), m.cols());
  g.values() = m.values().cast<float>();
  return g;
}

MaskBlock read_mask(const std::string& path) {
  auto v = read_ugb(path);
  auto* m = std::get_if<MaskBlock>(&v);
  if (!m) throw FormatError("mask file must use dtype u8: " + path);
  for (Eigen::Index i = 0; i < m->size(); ++i)
    if (m->values()[i] > 1) throw FormatError("mask file has non-binary value: " + path);
  return std::move(*m);
}

std::string series_meta_path(const std::string& path) { return path + ".meta"; }

void write_series(const std::string& path, const GridSeries& series) {
  write_grid(path, series.frames);
  KvConfig meta;
  meta.add("start_time", format_wall_time(series.start_time));
  meta.add("bin_hours", std::to_string(series.bin_hours));
  meta.save(series_meta_path(path));
}

GridSeries read_series(const std::string& path) {
  GridSeries s;
  s.frames = read_grid(path);
  const auto meta_path = series_meta_path(path);
  if (std::filesystem::exists(meta_path)) {
    const auto meta = KvConfig::load(meta_path);
    s.start_time = parse_wall_time(meta.require("start_time"));
    s.bin_hours = static_cast<int>(meta.get_int("bin_hours", 1));
  } else {
    s.start_time = parse_wall_time("1970-01-01T00:00:00");
  }
  return s;
}

}  // namespace stinpaint
