#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>

#include "stinpaint/common/error.hpp"

namespace stinpaint::cli {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read for digest: " + path);
  const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

RunManifest::RunManifest(std::string subcommand)
    : subcommand_(std::move(subcommand)), started_(std::chrono::steady_clock::now()) {}

void RunManifest::flag(const std::string& name, const std::vector<std::string>& values) {
  flags_.emplace_back(name, values);
}

void RunManifest::input(const std::string& path) { inputs_.push_back(path); }
void RunManifest::output(const std::string& path) { outputs_.push_back(path); }
void RunManifest::note(const std::string& key, const std::string& value) { notes_.emplace_back(key, value); }

std::string RunManifest::write(const std::string& path) const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["subcommand"] = subcommand_;
  ordered_json flags = ordered_json::object();
  for (const auto& [name, values] : flags_) flags[name] = values.size() == 1 ? ordered_json(values[0]) : ordered_json(values);
  j["flags"] = flags;
  j["seed"] = has_seed_ ? ordered_json(seed_) : ordered_json(nullptr);
  auto digests = [](const std::vector<std::string>& files) {
    ordered_json arr = ordered_json::array();
    for (const auto& f : files) {
      ordered_json e;
      e["path"] = f;
      if (std::filesystem::is_regular_file(f)) e["sha256"] = sha256_file(f);
      arr.push_back(e);
    }
    return arr;
  };
  j["inputs"] = digests(inputs_);
  j["outputs"] = digests(outputs_);
  ordered_json notes = ordered_json::object();
  for (const auto& [k, v] : notes_) notes[k] = v;
  j["results"] = notes;
  j["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();

  std::string target = path;
  if (target.empty()) {
    if (outputs_.empty()) return "";
    target = outputs_.front() + ".manifest.json";
  }
  std::ofstream out(target);
  if (!out) throw FormatError("cannot write manifest " + target);
  out << j.dump(2) << '\n';
  return target;
}

}  // namespace stinpaint::cli
