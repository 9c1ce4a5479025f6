#include "stinpaint/tensor/checkpoint.hpp"

#include <array>
#include <bit>
#include <istream>
#include <limits>
#include <ostream>

namespace stinpaint {
namespace {

static_assert(std::endian::native == std::endian::little, "UCKP I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'U', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) throw FormatError("UCKP truncated");
  return v;
}

CheckpointEntry tensor_entry(const std::string& name, const Tensor<float>& t) {
  CheckpointEntry e;
  e.name = name;
  for (int d : t.shape().dims()) e.dims.push_back(static_cast<std::uint32_t>(d));
  e.values.assign(t.data(), t.data() + t.size());
  return e;
}

void restore(const std::vector<CheckpointEntry>& entries, const std::string& name, Tensor<float>& dst) {
  const auto* e = find_entry(entries, name);
  if (!e) throw FormatError("checkpoint missing entry " + name);
  const auto dims = dst.shape().dims();
  if (e->dims.size() != 5) throw FormatError("checkpoint entry " + name + " is not 5-dimensional");
  for (int i = 0; i < 5; ++i)
    if (e->dims[i] != static_cast<std::uint32_t>(dims[i]))
      throw FormatError("checkpoint entry " + name + " has shape mismatch vs " + dst.shape().str());
  std::copy(e->values.begin(), e->values.end(), dst.data());
}

}  // namespace

void write_uckp(std::ostream& out, const std::vector<CheckpointEntry>& entries) {
  out.write(kMagic.data(), 4);
  put<std::uint8_t>(out, kUckpVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("UCKP name too long");
    std::uint64_t count = 1;
    for (auto d : e.dims) count *= d;
    if (count != e.values.size()) throw FormatError("UCKP entry " + e.name + ": dims do not match payload");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.dims.size()));
    for (auto d : e.dims) put<std::uint32_t>(out, d);
    out.write(reinterpret_cast<const char*>(e.values.data()), static_cast<std::streamsize>(e.values.size() * 4));
  }
}

std::vector<CheckpointEntry> read_uckp(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in.gcount() != 4 || magic != kMagic) throw FormatError("UCKP bad magic");
  if (get<std::uint8_t>(in) != kUckpVersion) throw FormatError("UCKP unsupported version");
  const auto n = get<std::uint32_t>(in);
  std::vector<CheckpointEntry> entries;
  for (std::uint32_t i = 0; i < n; ++i) {
    CheckpointEntry e;
    const auto len = get<std::uint16_t>(in);
    e.name.resize(len);
    in.read(e.name.data(), len);
    if (in.gcount() != len) throw FormatError("UCKP truncated name");
    const auto ndim = get<std::uint8_t>(in);
    std::uint64_t count = 1;
    for (int d = 0; d < ndim; ++d) {
      e.dims.push_back(get<std::uint32_t>(in));
      count *= e.dims.back();
      if (count > (std::uint64_t(1) << 31)) throw FormatError("UCKP entry too large");
    }
    e.values.resize(count);
    in.read(reinterpret_cast<char*>(e.values.data()), static_cast<std::streamsize>(count * 4));
    if (in.gcount() != static_cast<std::streamsize>(count * 4)) throw FormatError("UCKP truncated payload");
    entries.push_back(std::move(e));
  }
  return entries;
}

CheckpointEntry scalar_entry(const std::string& name, float value) { return CheckpointEntry{name, {1}, {value}}; }

const CheckpointEntry* find_entry(const std::vector<CheckpointEntry>& entries, const std::string& name) {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<CheckpointEntry> store_to_entries(const ParamStore<float>& store) {
  std::vector<CheckpointEntry> out;
  for (const auto& [name, e] : store.entries()) {
    if (e.trainable) {
      out.push_back(tensor_entry(name, e.value));
    } else {
      out.push_back(tensor_entry("stats/" + name, e.value));
    }
  }
  for (const auto& [name, e] : store.entries()) {
    if (!e.trainable) continue;
    out.push_back(tensor_entry("adam.m/" + name, e.first_moment));
    out.push_back(tensor_entry("adam.v/" + name, e.second_moment));
  }
  if (store.step() >= (std::int64_t(1) << 24)) throw FormatError("optimizer step count too large for UCKP");
  out.push_back(scalar_entry("adam.step", static_cast<float>(store.step())));
  return out;
}

void entries_to_store(const std::vector<CheckpointEntry>& entries, ParamStore<float>& store) {
  for (const auto& name : store.parameter_names()) {
    auto& e = store.entry(name);
    restore(entries, name, e.value);
    restore(entries, "adam.m/" + name, e.first_moment);
    restore(entries, "adam.v/" + name, e.second_moment);
  }
  for (const auto& name : store.buffer_names()) restore(entries, "stats/" + name, store.value(name));
  const auto* step = find_entry(entries, "adam.step");
  if (!step || step->values.size() != 1) throw FormatError("checkpoint missing adam.step");
  store.set_step(static_cast<std::int64_t>(step->values[0]));
}

}  // namespace stinpaint
