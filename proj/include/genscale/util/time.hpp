#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace genscale::util {

using Clock = std::chrono::system_clock;
using Timestamp = std::chrono::time_point<Clock, std::chrono::milliseconds>;
using ClockFn = std::function<Timestamp()>;

inline Timestamp now_ms() { return std::chrono::time_point_cast<std::chrono::milliseconds>(Clock::now()); }

/// ISO-8601 UTC with millisecond precision: 2024-05-01T12:30:00.250Z
inline std::string to_iso8601(Timestamp ts) {
  using namespace std::chrono;
  auto day = floor<days>(ts);
  year_month_day ymd{day};
  auto ms = (ts - day).count();
  long long h = ms / 3'600'000, m = ms / 60'000 % 60, s = ms / 1000 % 60, frac = ms % 1000;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), h, m, s, frac);
  return buf;
}

inline std::optional<Timestamp> parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
  std::string copy(text);
  int n = std::sscanf(copy.c_str(), "%d-%u-%uT%u:%u:%u.%uZ", &y, &mo, &d, &h, &mi, &s, &ms);
  if (n < 6) return std::nullopt;
  year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60 || ms > 999) return std::nullopt;
  return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

/// Deterministic clock for simulations: starts at `start`, advances `step` per call.
class SteppingClock {
 public:
  explicit SteppingClock(Timestamp start, std::chrono::milliseconds step = std::chrono::milliseconds{1000})
      : next_(start), step_(step) {}
  Timestamp operator()() {
    Timestamp t = next_;
    next_ += step_;
    return t;
  }

 private:
  Timestamp next_;
  std::chrono::milliseconds step_;
};

}  // namespace genscale::util
