#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace stinpaint::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

/// Record of one CLI run, written as JSON next to the primary output.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand);

  void flag(const std::string& name, const std::vector<std::string>& values);
  void seed(std::uint64_t s) { seed_ = s; has_seed_ = true; }
  void input(const std::string& path);
  void output(const std::string& path);
  void note(const std::string& key, const std::string& value);

  /// Digests every declared file and writes `<primary output>.manifest.json`
  /// (or `path` when given). Returns the manifest path.
  std::string write(const std::string& path = "") const;

  const std::vector<std::string>& outputs() const { return outputs_; }

 private:
  std::string subcommand_;
  std::vector<std::pair<std::string, std::vector<std::string>>> flags_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, std::string>> notes_;
  std::uint64_t seed_ = 0;
  bool has_seed_ = false;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace stinpaint::cli
