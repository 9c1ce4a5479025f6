#include "stinpaint/common/kv_config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stinpaint/common/error.hpp"

namespace stinpaint {

std::vector<std::string> split(const std::string& text, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(text);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!text.empty() && text.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  // from_chars for double is missing from older libstdc++.
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw FormatError("not a number: '" + text + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

long long parse_int(const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw FormatError("not an integer: '" + text + "'");
  return v;
}

KvConfig KvConfig::parse(std::istream& in) {
  KvConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0)
      throw FormatError("line " + std::to_string(lineno) + ": expected key=value");
    cfg.add(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

KvConfig KvConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config: " + path);
  return parse(in);
}

void KvConfig::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  add(key, value);
}

void KvConfig::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

bool KvConfig::has(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> KvConfig::get(const std::string& key) const {
  std::optional<std::string> found;
  for (const auto& [k, v] : entries_)
    if (k == key) found = v;
  return found;
}

std::vector<std::string> KvConfig::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (k == key) out.push_back(v);
  return out;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_double(*v) : fallback;
}

long long KvConfig::get_int(const std::string& key, long long fallback) const {
  const auto v = get(key);
  return v ? parse_int(*v) : fallback;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  throw FormatError("not a boolean for '" + key + "': " + *v);
}

std::string KvConfig::require(const std::string& key) const {
  const auto v = get(key);
  if (!v) throw FormatError("missing required key '" + key + "'");
  return *v;
}

double KvConfig::require_double(const std::string& key) const { return parse_double(require(key)); }
long long KvConfig::require_int(const std::string& key) const { return parse_int(require(key)); }

void KvConfig::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

void KvConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write config: " + path);
  write(out);
}

}  // namespace stinpaint
