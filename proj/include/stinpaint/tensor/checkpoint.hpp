#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stinpaint/tensor/param_store.hpp"

namespace stinpaint {

// UCKP container: "UCKP", u8 version (1), u32 LE entry count, then per entry
// u16 LE name length, UTF-8 name, u8 ndim, ndim x u32 LE dims, f32 LE payload.
//
// Reserved name prefixes:
//   stats/<name>    non-trainable buffers (batch-norm running statistics)
//   adam.m/<name>   first moments
//   adam.v/<name>   second moments
//   adam.step       optimizer step count (one f32, exact below 2^24)
//   meta/<key>      caller metadata (e.g. meta/iter)

struct CheckpointEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

inline constexpr std::uint8_t kUckpVersion = 1;

void write_uckp(std::ostream& out, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_uckp(std::istream& in);

std::vector<CheckpointEntry> store_to_entries(const ParamStore<float>& store);
/// Restores values and optimizer state into a store that already holds every
/// name (built from the same config). Throws FormatError on missing entries
/// or shape mismatch.
void entries_to_store(const std::vector<CheckpointEntry>& entries, ParamStore<float>& store);

CheckpointEntry scalar_entry(const std::string& name, float value);
const CheckpointEntry* find_entry(const std::vector<CheckpointEntry>& entries, const std::string& name);

}  // namespace stinpaint
