#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdtm/bound.hpp"
#include "cdtm/pattern.hpp"

namespace cdtm {

/// Reference implementation that materializes every (tick, word) cell and
/// runs the filter, smoother, objective, and gradient tick by tick over the
/// dense grid. Used by tests and the CLI --oracle flag to check the sparse
/// path; deliberately written as plain dense loops, sharing no code with it.
///
/// Refuses instances with K * V * T above `cap` entries.

struct DenseMoments {
  int topics = 0;
  std::int32_t vocab_size = 0;
  int ticks = 0;
  // topics x V x T, tick fastest
  std::vector<double> pred_var;
  std::vector<double> fwd_mean;
  std::vector<double> fwd_var;
  std::vector<double> smooth_mean;
  std::vector<double> smooth_var;

  std::size_t index(int k, std::int32_t w, int t) const {
    return (static_cast<std::size_t>(k) * vocab_size + w) * ticks + t;
  }
};

inline constexpr std::int64_t kDenseOracleCap = 1'000'000;

DenseMoments dense_moments(const SparsityPattern& pattern, std::span<const double> params,
                           const TimeGrid& grid, const ModelConfig& cfg,
                           std::int64_t cap = kDenseOracleCap);

BoundValue dense_objective(const SparsityPattern& pattern, std::span<const double> params,
                           const ExpectedCounts& counts, const TimeGrid& grid,
                           const ModelConfig& cfg, std::int64_t cap = kDenseOracleCap);

std::vector<double> dense_gradient(const SparsityPattern& pattern, std::span<const double> params,
                                   const ExpectedCounts& counts, const TimeGrid& grid,
                                   const ModelConfig& cfg, std::int64_t cap = kDenseOracleCap);

/// K * V * T, the entry count the dense representation would need.
std::int64_t dense_entries(const SparsityPattern& pattern, int topics);

}  // namespace cdtm
