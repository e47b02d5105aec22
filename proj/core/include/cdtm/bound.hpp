#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdtm/chains.hpp"
#include "cdtm/pattern.hpp"

namespace cdtm {

/// Chain moments for every word of one topic, laid out on the pattern's
/// word-major slots (the "skeleton": O(sum delta) memory, never V x T).
struct TopicPosterior {
  std::vector<double> pred_var;
  std::vector<double> fwd_mean;
  std::vector<double> fwd_var;
  std::vector<double> smooth_mean;
  std::vector<double> smooth_var;
  std::vector<double> pred_logdens;

  void resize(std::int64_t slots);
};

/// phi-weighted word counts per (tick, topic): ntilde_{t,k,w} on the
/// pattern's slots (zero off-pattern by construction) plus per-tick totals.
struct ExpectedCounts {
  int topics = 0;
  std::vector<double> slot_values;  // topics x slots, topic-major
  std::vector<double> tick_totals;  // topics x ticks, topic-major

  std::span<const double> topic_slots(int k, std::int64_t slots) const {
    return {slot_values.data() + static_cast<std::size_t>(k) * slots,
            static_cast<std::size_t>(slots)};
  }

  /// K = 1 counts straight from the corpus (phi degenerate).
  static ExpectedCounts from_pattern(const SparsityPattern& pattern);
};

/// Objective value split into its summands. beta_hat-independent constants
/// (Gaussian log-normalizers, smoothed-variance quadratic terms, entropies)
/// are dropped; `constants` stays 0 and is kept to make that contract
/// explicit. Compare objectives by differences, not absolute values.
struct BoundValue {
  double total = 0.0;
  double word_likelihood = 0.0;
  double pseudo_penalty = 0.0;  // -(beta_hat - sm)^2 / (2 vhat) summed
  double predictive = 0.0;      // -(beta_hat - m_prev)^2 / (2 (P + vhat)) summed
  double constants = 0.0;
};

/// Gradient with respect to every stored beta_hat, topic-major, aligned
/// with the parameter layout.
struct GradientBuffer {
  int topics = 0;
  std::vector<double> values;  // topics x slots
};

/// Assembles the variational objective over the pseudo-observations and its
/// exact gradient. Both run in O(V*T + slots) per topic and O(slots + T)
/// extra memory.
class BoundEvaluator {
 public:
  BoundEvaluator(const SparsityPattern& pattern, const TimeGrid& grid, const ModelConfig& cfg);

  const SparsityPattern& pattern() const { return *pattern_; }
  const ModelConfig& config() const { return *cfg_; }

  /// Filter + smooth every chain of one topic into `post`.
  void update_posterior(std::span<const double> beta_hat, TopicPosterior& post,
                        ChainDiagnostics* diag = nullptr) const;

  ChainView chain(const TopicPosterior& post, std::int32_t word) const;

  /// log sum_w exp(sm_{t,w} + sV_{t,w}/2) for every tick, full vocabulary,
  /// skip-interpolated moments for off-pattern cells.
  void tick_log_norms(const TopicPosterior& post, std::span<double> out) const;

  /// Word-likelihood bound at one (tick, topic):
  /// sum_w ntilde_{t,k,w} sm_{t,k,w} - ntilde_{t,k} * lognorm_t.
  double word_likelihood_term(const TopicPosterior& post, const ExpectedCounts& counts, int k,
                              int tick) const;

  /// One topic's objective; `beta_hat` and `post` must be consistent.
  BoundValue topic_objective(std::span<const double> beta_hat, const TopicPosterior& post,
                             const ExpectedCounts& counts, int k) const;

  /// One topic's objective plus d(objective)/d(beta_hat) via a reverse sweep
  /// through the filter/smoother recursions (variances never depend on
  /// beta_hat, so only the affine mean maps are adjointed).
  /// Throws NumericalError naming (topic, tick, word) on a non-finite entry.
  BoundValue topic_objective_gradient(std::span<const double> beta_hat, const TopicPosterior& post,
                                      const ExpectedCounts& counts, int k,
                                      std::span<double> grad_out) const;

  /// Full objective over all topics (deterministic topic-major reduction).
  BoundValue objective(std::span<const double> params, const ExpectedCounts& counts) const;

  /// Full gradient; layout mirrors `params`.
  GradientBuffer gradient(std::span<const double> params, const ExpectedCounts& counts) const;

 private:
  BoundValue topic_objective_impl(std::span<const double> beta_hat, const TopicPosterior& post,
                                  const ExpectedCounts& counts, int k,
                                  std::span<const double> log_norms) const;

  const SparsityPattern* pattern_;
  const TimeGrid* grid_;
  const ModelConfig* cfg_;
};

}  // namespace cdtm
