#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>

#include "stinpaint/data/grid.hpp"

namespace stinpaint {

// UGB container: "UGB1", u8 version (1), u8 dtype (0 = f32, 1 = u8),
// u8 ndim (3), 3 x u32 LE dims (T, H, W), then the row-major payload with
// t outermost. f32 values are IEEE-754 little endian.

enum class UgbDtype : std::uint8_t { F32 = 0, U8 = 1 };

inline constexpr std::uint8_t kUgbVersion = 1;

void write_ugb(std::ostream& out, const GridBlock& block);
void write_ugb(std::ostream& out, const MaskBlock& mask);
void write_grid(const std::string& path, const GridBlock& block);
void write_mask(const std::string& path, const MaskBlock& mask);

using UgbVolume = std::variant<GridBlock, MaskBlock>;

/// Throws FormatError on bad magic/version/dtype, truncated payload, or dims
/// whose product overflows.
UgbVolume read_ugb(std::istream& in);
UgbVolume read_ugb(const std::string& path);

/// Reads a f32 file; u8 files are widened.
GridBlock read_grid(const std::string& path);
/// Reads a u8 file whose values are all 0 or 1.
MaskBlock read_mask(const std::string& path);

/// Series = UGB frames plus `<path>.meta` holding start_time / bin_hours.
void write_series(const std::string& path, const GridSeries& series);
GridSeries read_series(const std::string& path);
std::string series_meta_path(const std::string& path);

}  // namespace stinpaint
