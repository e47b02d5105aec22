#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdtm/config.hpp"

namespace cdtm {

/// UTC bucket start for a stamp at the given granularity (identity for raw).
/// Weeks are ISO weeks (Monday start); months are calendar months.
std::int64_t bucket_start(std::int64_t stamp_seconds, Granularity g);

/// Start of the bucket immediately before the one containing `stamp_seconds`.
std::int64_t previous_bucket(std::int64_t stamp_seconds, Granularity g);

/// Exclusive end of the bucket containing `stamp_seconds`.
std::int64_t bucket_end(std::int64_t stamp_seconds, Granularity g);

/// Seconds per grid unit: 1 for raw/hour grids (gaps in seconds),
/// 86400 otherwise (gaps in days).
double grid_unit_seconds(Granularity g);

/// Parses `YYYY-MM-DD[Thh:mm:ss[Z]]` into epoch seconds (UTC).
/// Returns false on malformed input.
bool parse_iso8601(std::string_view text, std::int64_t& out_seconds);

/// Formats epoch seconds as `YYYY-MM-DDThh:mm:ssZ`.
std::string format_iso8601(std::int64_t stamp_seconds);

/// Ordered occupied buckets of a corpus. Only buckets that contain at least
/// one document are materialized; gaps absorb the skipped spans.
struct TimeGrid {
  Granularity granularity = Granularity::raw;
  std::vector<std::int64_t> stamps;  // bucket starts, epoch seconds, strictly increasing
  std::int64_t origin = 0;           // s_0: one grid step before the first tick

  int ticks() const { return static_cast<int>(stamps.size()); }
  double unit_seconds() const { return grid_unit_seconds(granularity); }

  /// Elapsed time in grid units between two stamps (to >= from).
  double elapsed(std::int64_t from_stamp, std::int64_t to_stamp) const;

  /// Gap before tick t in grid units; gap(0) is measured from the origin.
  double gap(int t) const;

  double elapsed_from_origin(std::int64_t stamp) const { return elapsed(origin, stamp); }

  /// Index of the tick with exactly this stamp, or -1.
  int find_tick(std::int64_t stamp) const;

  /// Tick whose stamp is nearest to `stamp` (ties toward the earlier tick).
  /// Grid must be non-empty.
  int nearest_tick(std::int64_t stamp) const;
};

}  // namespace cdtm
