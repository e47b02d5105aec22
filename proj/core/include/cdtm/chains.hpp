#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cdtm/config.hpp"
#include "cdtm/time_grid.hpp"

namespace cdtm {

/// Per-(topic, word) Gaussian chains under a Brownian prior.
///
/// Each chain sees pseudo-observations beta_hat only at the ticks where the
/// word occurs. The forward filter over the observed ticks is
///
///   P_r = V_{r-1} + v * elapsed(o_{r-1}, o_r)
///   m_r = (beta_hat_r * P_r + vhat * m_{r-1}) / (P_r + vhat)
///   V_r = vhat * P_r / (P_r + vhat)
///
/// with (m_0, V_0) = (prior_mean, v0) at the grid origin, and each
/// observation carries predictive density N(beta_hat_r | m_{r-1}, P_r + vhat).
/// Ticks without an observation never enter the recursion: the mean is
/// carried and the variance accumulates v * elapsed, which is exactly what
/// the gap term above does in one step.
///
/// The backward (fixed-interval) smoother over the same slots is
///
///   g_r        = V_r / P_{r+1}
///   sm_r       = (1 - g_r) * m_r + g_r * sm_{r+1}
///   sV_r       = V_r + g_r^2 * (sV_{r+1} - P_{r+1})
///
/// initialized with sm = m, sV = V at the last observation. Moments at any
/// unobserved tick follow in closed form from the bracketing slots (see
/// MomentWalker / moments_at_stamp).

/// Observation list of one chain: strictly increasing tick indices plus the
/// pseudo-observation values at those ticks.
struct ChainObservations {
  std::span<const std::int32_t> ticks;
  std::span<const double> values;

  std::size_t size() const { return ticks.size(); }
};

/// Chain moments at the observed ticks only.
struct ChainPosterior {
  std::vector<double> pred_var;      // P
  std::vector<double> fwd_mean;      // m
  std::vector<double> fwd_var;       // V
  std::vector<double> smooth_mean;   // sm
  std::vector<double> smooth_var;    // sV
  std::vector<double> pred_logdens;  // log N(beta_hat | m_prev, P + vhat)
  double prior_mean = 0.0;
  double prior_var = 1.0;

  void resize(std::size_t n);
};

/// Caller-allocated column views over a posterior laid out in bigger
/// buffers; all spans have the chain's observation count.
struct ChainMoments {
  std::span<double> pred_var;
  std::span<double> fwd_mean;
  std::span<double> fwd_var;
  std::span<double> smooth_mean;
  std::span<double> smooth_var;
  std::span<double> pred_logdens;
};

struct ChainDiagnostics {
  std::int64_t variance_clamps = 0;
};

/// Forward filter; fills pred_var/fwd_mean/fwd_var/pred_logdens.
void forward_filter(const ChainObservations& obs, const TimeGrid& grid, const ModelConfig& cfg,
                    ChainMoments out, ChainDiagnostics* diag = nullptr);

/// Backward smoother; requires a completed forward pass in `out`.
void backward_smooth(const ChainObservations& obs, const TimeGrid& grid, const ModelConfig& cfg,
                     ChainMoments out, ChainDiagnostics* diag = nullptr);

/// Convenience wrapper allocating a ChainPosterior and running both passes.
ChainPosterior filter_smooth(const ChainObservations& obs, const TimeGrid& grid,
                             const ModelConfig& cfg, ChainDiagnostics* diag = nullptr);

/// Read-only view of a chain's observed ticks and moments.
struct ChainView {
  std::span<const std::int32_t> ticks;
  std::span<const double> pred_var;
  std::span<const double> fwd_mean;
  std::span<const double> fwd_var;
  std::span<const double> smooth_mean;
  std::span<const double> smooth_var;

  std::size_t size() const { return ticks.size(); }
};

ChainView view(const ChainObservations& obs, const ChainPosterior& post);

/// Smoothed moments (mean, variance) at an arbitrary stamp:
///  - at an observed tick, the stored moments;
///  - between observations, the closed-form bridge
///      c  = (V_i + v*elapsed(i, t)) / P_j
///      sm = (1 - c) * m_i + c * sm_j,  sV = Vt + (Vt / P_j)^2 (sV_j - P_j)
///    where i/j are the bracketing slots and Vt = V_i + v*elapsed(i, t)
///    (before the first observation the prior at the origin plays the role
///    of slot i);
///  - past the last observation, the mean is carried and the variance grows
///    by v*elapsed.
/// Agrees with the tick-by-tick recursion through materialized virtual
/// ticks; the bridge is its telescoped closed form.
std::pair<double, double> moments_at_stamp(const ChainView& chain, const TimeGrid& grid,
                                           const ModelConfig& cfg, std::int64_t stamp);

/// Same, addressed by grid tick index.
std::pair<double, double> moments_at_tick(const ChainView& chain, const TimeGrid& grid,
                                          const ModelConfig& cfg, int tick);

/// Sweeps a chain's moments across ticks in nondecreasing order in O(T + n)
/// total, keeping the bracketing slot incrementally.
class MomentWalker {
 public:
  MomentWalker(const ChainView& chain, const TimeGrid& grid, const ModelConfig& cfg);

  /// Moments at tick t; successive calls must not decrease t.
  std::pair<double, double> at(int tick);

 private:
  const ChainView& chain_;
  const TimeGrid& grid_;
  const ModelConfig& cfg_;
  std::size_t next_ = 0;  // first slot with tick >= query
};

struct ChainSample {
  double initial = 0.0;        // draw at the grid origin
  std::vector<double> values;  // per tick
};

/// Draws one trajectory of the Brownian prior over the grid; deterministic
/// per seed.
ChainSample sample_chain(const TimeGrid& grid, const ModelConfig& cfg, std::uint64_t seed);

/// pi(beta)_w = exp(beta_w) / sum exp, computed with a max shift.
void softmax_map(std::span<const double> natural, std::span<double> probs_out);
std::vector<double> softmax_map(std::span<const double> natural);

}  // namespace cdtm
