#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stinpaint {

/// Flat `key=value` configuration. Blank lines and lines starting with '#'
/// are ignored; keys may repeat (e.g. one `hotspot=` line per hotspot) and
/// keep their file order.
class KvConfig {
 public:
  static KvConfig parse(std::istream& in);
  static KvConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void add(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::vector<std::string> get_all(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Required variants throw FormatError when the key is absent.
  std::string require(const std::string& key) const;
  double require_double(const std::string& key) const;
  long long require_int(const std::string& key) const;

  void write(std::ostream& out) const;
  void save(const std::string& path) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Splits on a single-character delimiter, keeping empty fields.
std::vector<std::string> split(const std::string& text, char delim);
std::string trim(const std::string& text);

double parse_double(const std::string& text);
/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);
long long parse_int(const std::string& text);

}  // namespace stinpaint
