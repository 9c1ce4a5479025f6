#include <cstdio>
#include <istream>

#include "stinpaint/common/error.hpp"
#include "stinpaint/common/kv_config.hpp"
#include "stinpaint/data/grid.hpp"

namespace stinpaint {

WallTime parse_wall_time(const std::string& iso) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  const std::string t = trim(iso);
  const int n = std::sscanf(t.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &s, &consumed);
  bool ok = false;
  if (n == 7 && static_cast<std::size_t>(consumed) == t.size()) {
    ok = true;
  } else {
    s = 0;
    consumed = 0;
    const int m = std::sscanf(t.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed);
    ok = m == 6 && static_cast<std::size_t>(consumed) == t.size();
  }
  if (!ok || (sep != 'T' && sep != ' ')) throw FormatError("bad timestamp: '" + iso + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(mo)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60)
    throw FormatError("bad timestamp: '" + iso + "'");
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} + std::chrono::seconds{s};
}

std::string format_wall_time(WallTime t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()), long(hms.hours().count()), long(hms.minutes().count()),
                long(hms.seconds().count()));
  return buf;
}

int hour_of_day(WallTime t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  return static_cast<int>(std::chrono::duration_cast<std::chrono::hours>(t - day).count());
}

ParsedEvents parse_events(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("event stream is empty (missing header)");
  if (trim(line) != "timestamp,lon,lat") throw IngestError("expected header 'timestamp,lon,lat', got '" + line + "'");
  ParsedEvents out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      ++out.skipped;
      continue;
    }
    try {
      EventRecord r;
      r.timestamp = parse_wall_time(fields[0]);
      r.lon = parse_double(fields[1]);
      r.lat = parse_double(fields[2]);
      out.records.push_back(r);
    } catch (const FormatError&) {
      ++out.skipped;
    }
  }
  if (in.bad()) throw IngestError("read error in event stream");
  return out;
}

}  // namespace stinpaint
