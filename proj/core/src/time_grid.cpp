#include "cdtm/time_grid.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace cdtm {

namespace {

namespace chr = std::chrono;

chr::sys_seconds to_time_point(std::int64_t stamp) {
  return chr::sys_seconds{chr::seconds{stamp}};
}

std::int64_t to_stamp(chr::sys_seconds tp) { return tp.time_since_epoch().count(); }

chr::sys_days month_start(chr::sys_days day) {
  chr::year_month_day ymd{day};
  return chr::sys_days{ymd.year() / ymd.month() / chr::day{1}};
}

chr::sys_days week_start(chr::sys_days day) {
  chr::weekday wd{day};
  return day - chr::days{wd.iso_encoding() - 1};  // back to Monday
}

}  // namespace

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::raw: return "raw";
    case Granularity::hour: return "hour";
    case Granularity::day: return "day";
    case Granularity::week: return "week";
    case Granularity::month: return "month";
  }
  return "?";
}

std::optional<Granularity> granularity_from_string(std::string_view name) {
  if (name == "raw") return Granularity::raw;
  if (name == "hour") return Granularity::hour;
  if (name == "day") return Granularity::day;
  if (name == "week") return Granularity::week;
  if (name == "month") return Granularity::month;
  return std::nullopt;
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid model config: ") + what);
  };
  require(topics >= 1, "topics must be >= 1");
  require(v > 0.0, "v must be > 0");
  require(v0 > 0.0, "v0 must be > 0");
  require(alpha > 0.0, "alpha must be > 0");
  require(vhat > 0.0, "vhat must be > 0");
  require(outer_tol > 0.0, "outer tolerance must be > 0");
  require(doc_tol > 0.0, "document tolerance must be > 0");
  require(max_outer_iterations >= 1, "max outer iterations must be >= 1");
  require(max_doc_iterations >= 1, "max document iterations must be >= 1");
  require(cg_iterations >= 1, "cg iterations must be >= 1");
  require(jitter_std >= 0.0, "jitter std must be >= 0");
  require(variance_floor > 0.0, "variance floor must be > 0");
}

std::int64_t bucket_start(std::int64_t stamp, Granularity g) {
  using namespace std::chrono;
  const auto tp = to_time_point(stamp);
  switch (g) {
    case Granularity::raw:
      return stamp;
    case Granularity::hour:
      return to_stamp(floor<hours>(tp));
    case Granularity::day:
      return to_stamp(floor<days>(tp));
    case Granularity::week:
      return to_stamp(week_start(floor<days>(tp)));
    case Granularity::month:
      return to_stamp(month_start(floor<days>(tp)));
  }
  return stamp;
}

std::int64_t previous_bucket(std::int64_t stamp, Granularity g) {
  const std::int64_t start = bucket_start(stamp, g);
  switch (g) {
    case Granularity::raw: return start - 1;
    case Granularity::hour: return start - 3600;
    case Granularity::day: return start - 86400;
    case Granularity::week: return start - 7 * 86400;
    case Granularity::month: return bucket_start(start - 86400, Granularity::month);
  }
  return start - 1;
}

std::int64_t bucket_end(std::int64_t stamp, Granularity g) {
  const std::int64_t start = bucket_start(stamp, g);
  switch (g) {
    case Granularity::raw: return start + 1;
    case Granularity::hour: return start + 3600;
    case Granularity::day: return start + 86400;
    case Granularity::week: return start + 7 * 86400;
    case Granularity::month: {
      using namespace std::chrono;
      const year_month_day ymd{floor<days>(to_time_point(start))};
      const year_month next = ymd.year() / ymd.month() + months{1};
      return to_stamp(sys_days{next / day{1}});
    }
  }
  return start + 1;
}

double grid_unit_seconds(Granularity g) {
  switch (g) {
    case Granularity::raw:
    case Granularity::hour:
      return 1.0;
    default:
      return 86400.0;
  }
}

bool parse_iso8601(std::string_view text, std::int64_t& out) {
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  char buf[40];
  if (text.empty() || text.size() >= sizeof(buf)) return false;
  std::copy(text.begin(), text.end(), buf);
  buf[text.size()] = '\0';

  int consumed = 0;
  const int fields =
      std::sscanf(buf, "%d-%d-%d%n", &year, &month, &day, &consumed);
  if (fields != 3) return false;
  if (static_cast<std::size_t>(consumed) < text.size()) {
    char sep = '\0';
    int tail = 0;
    if (std::sscanf(buf + consumed, "%c%d:%d:%d%n", &sep, &hour, &minute, &second, &tail) != 4 ||
        (sep != 'T' && sep != ' ')) {
      return false;
    }
    consumed += tail;
    std::size_t rest = text.size() - static_cast<std::size_t>(consumed);
    if (rest == 1 && buf[consumed] == 'Z') {
      // UTC marker
    } else if (rest != 0) {
      return false;
    }
  }

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                           std::chrono::day{unsigned(day)}};
  if (!ymd.ok()) return false;
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 60) return false;
  const sys_days dp{ymd};
  out = to_stamp(dp) + hour * 3600 + minute * 60 + second;
  return true;
}

std::string format_iso8601(std::int64_t stamp) {
  using namespace std::chrono;
  const auto tp = to_time_point(stamp);
  const auto dp = floor<days>(tp);
  const year_month_day ymd{dp};
  const hh_mm_ss<seconds> hms{tp - dp};
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

double TimeGrid::elapsed(std::int64_t from_stamp, std::int64_t to_stamp) const {
  return static_cast<double>(to_stamp - from_stamp) / unit_seconds();
}

double TimeGrid::gap(int t) const {
  const std::int64_t prev = t == 0 ? origin : stamps[t - 1];
  return elapsed(prev, stamps[t]);
}

int TimeGrid::find_tick(std::int64_t stamp) const {
  const auto it = std::lower_bound(stamps.begin(), stamps.end(), stamp);
  if (it == stamps.end() || *it != stamp) return -1;
  return static_cast<int>(it - stamps.begin());
}

int TimeGrid::nearest_tick(std::int64_t stamp) const {
  const auto it = std::lower_bound(stamps.begin(), stamps.end(), stamp);
  if (it == stamps.begin()) return 0;
  if (it == stamps.end()) return ticks() - 1;
  const auto lo = it - 1;
  return (stamp - *lo <= *it - stamp) ? static_cast<int>(lo - stamps.begin())
                                      : static_cast<int>(it - stamps.begin());
}

}  // namespace cdtm
