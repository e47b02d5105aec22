#include "cdtm/bound.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cdtm/errors.hpp"

namespace cdtm {

void TopicPosterior::resize(std::int64_t slots) {
  const auto n = static_cast<std::size_t>(slots);
  pred_var.resize(n);
  fwd_mean.resize(n);
  fwd_var.resize(n);
  smooth_mean.resize(n);
  smooth_var.resize(n);
  pred_logdens.resize(n);
}

ExpectedCounts ExpectedCounts::from_pattern(const SparsityPattern& pattern) {
  ExpectedCounts counts;
  counts.topics = 1;
  counts.slot_values.assign(pattern.slot_count.begin(), pattern.slot_count.end());
  counts.tick_totals.assign(pattern.tick_count, 0.0);
  for (std::int64_t s = 0; s < pattern.slots(); ++s) {
    counts.tick_totals[pattern.slot_tick[s]] += static_cast<double>(pattern.slot_count[s]);
  }
  return counts;
}

BoundEvaluator::BoundEvaluator(const SparsityPattern& pattern, const TimeGrid& grid,
                               const ModelConfig& cfg)
    : pattern_(&pattern), grid_(&grid), cfg_(&cfg) {}

namespace {

template <typename Vec>
std::span<double> word_span(Vec& buffer, const SparsityPattern& pattern, std::int32_t w) {
  return std::span<double>(buffer.data() + pattern.word_offsets[w],
                           static_cast<std::size_t>(pattern.word_offsets[w + 1] -
                                                    pattern.word_offsets[w]));
}

/// Streaming log-sum-exp accumulators, one per tick, fed word by word.
struct OnlineLogSumExp {
  std::vector<double> max_val;
  std::vector<double> scaled_sum;

  explicit OnlineLogSumExp(int ticks)
      : max_val(ticks, -std::numeric_limits<double>::infinity()), scaled_sum(ticks, 0.0) {}

  void add(int t, double x) {
    if (x <= max_val[t]) {
      scaled_sum[t] += std::exp(x - max_val[t]);
    } else {
      scaled_sum[t] = scaled_sum[t] * std::exp(max_val[t] - x) + 1.0;
      max_val[t] = x;
    }
  }

  double value(int t) const { return max_val[t] + std::log(scaled_sum[t]); }
};

}  // namespace

void BoundEvaluator::update_posterior(std::span<const double> beta_hat, TopicPosterior& post,
                                      ChainDiagnostics* diag) const {
  const auto& pat = *pattern_;
  post.resize(pat.slots());
  for (std::int32_t w = 0; w < pat.vocab_size; ++w) {
    const auto ticks = pat.word_ticks(w);
    const ChainObservations obs{
        ticks, beta_hat.subspan(static_cast<std::size_t>(pat.word_offsets[w]), ticks.size())};
    ChainMoments moments{word_span(post.pred_var, pat, w),    word_span(post.fwd_mean, pat, w),
                         word_span(post.fwd_var, pat, w),     word_span(post.smooth_mean, pat, w),
                         word_span(post.smooth_var, pat, w),  word_span(post.pred_logdens, pat, w)};
    forward_filter(obs, *grid_, *cfg_, moments, diag);
    backward_smooth(obs, *grid_, *cfg_, moments, diag);
  }
}

ChainView BoundEvaluator::chain(const TopicPosterior& post, std::int32_t word) const {
  const auto& pat = *pattern_;
  const auto off = static_cast<std::size_t>(pat.word_offsets[word]);
  const auto len = static_cast<std::size_t>(pat.word_offsets[word + 1]) - off;
  return ChainView{pat.word_ticks(word),
                   std::span<const double>(post.pred_var.data() + off, len),
                   std::span<const double>(post.fwd_mean.data() + off, len),
                   std::span<const double>(post.fwd_var.data() + off, len),
                   std::span<const double>(post.smooth_mean.data() + off, len),
                   std::span<const double>(post.smooth_var.data() + off, len)};
}

void BoundEvaluator::tick_log_norms(const TopicPosterior& post, std::span<double> out) const {
  const auto& pat = *pattern_;
  const int T = pat.tick_count;
  OnlineLogSumExp lse(T);
  for (std::int32_t w = 0; w < pat.vocab_size; ++w) {
    MomentWalker walker(chain(post, w), *grid_, *cfg_);
    for (int t = 0; t < T; ++t) {
      const auto [mean, var] = walker.at(t);
      lse.add(t, mean + 0.5 * var);
    }
  }
  for (int t = 0; t < T; ++t) out[t] = lse.value(t);
}

double BoundEvaluator::word_likelihood_term(const TopicPosterior& post,
                                            const ExpectedCounts& counts, int k, int tick) const {
  const auto& pat = *pattern_;
  const auto slots = counts.topic_slots(k, pat.slots());

  // Single-tick log normalizer over the full vocabulary.
  OnlineLogSumExp lse(1);
  for (std::int32_t w = 0; w < pat.vocab_size; ++w) {
    const auto [mean, var] = moments_at_tick(chain(post, w), *grid_, *cfg_, tick);
    lse.add(0, mean + 0.5 * var);
  }

  double linear = 0.0;
  for (std::int64_t i = pat.tick_offsets[tick]; i < pat.tick_offsets[tick + 1]; ++i) {
    const std::int64_t slot = pat.tick_slot[i];
    linear += slots[slot] * post.smooth_mean[slot];
  }
  const double total = counts.tick_totals[static_cast<std::size_t>(k) * pat.tick_count + tick];
  return linear - total * lse.value(0);
}

BoundValue BoundEvaluator::topic_objective(std::span<const double> beta_hat,
                                           const TopicPosterior& post, const ExpectedCounts& counts,
                                           int k) const {
  const int T = pattern_->tick_count;
  if (T == 0) return {};
  std::vector<double> log_norms(T);
  tick_log_norms(post, log_norms);
  return topic_objective_impl(beta_hat, post, counts, k, log_norms);
}

BoundValue BoundEvaluator::topic_objective_impl(std::span<const double> beta_hat,
                                                const TopicPosterior& post,
                                                const ExpectedCounts& counts, int k,
                                                std::span<const double> log_norms) const {
  const auto& pat = *pattern_;
  const std::int64_t S = pat.slots();
  const int T = pat.tick_count;
  const auto slots = counts.topic_slots(k, S);
  const double* totals = counts.tick_totals.data() + static_cast<std::size_t>(k) * T;

  BoundValue value;
  double word = 0.0;
  for (std::int64_t s = 0; s < S; ++s) word += slots[s] * post.smooth_mean[s];
  for (int t = 0; t < T; ++t) word -= totals[t] * log_norms[t];

  double pseudo = 0.0;
  for (std::int64_t s = 0; s < S; ++s) {
    const double r = beta_hat[s] - post.smooth_mean[s];
    pseudo -= r * r;
  }
  pseudo /= 2.0 * cfg_->vhat;

  double predictive = 0.0;
  for (std::int32_t w = 0; w < pat.vocab_size; ++w) {
    const std::int64_t begin = pat.word_offsets[w];
    const std::int64_t end = pat.word_offsets[w + 1];
    double prev_mean = cfg_->prior_mean;
    for (std::int64_t s = begin; s < end; ++s) {
      const double r = beta_hat[s] - prev_mean;
      predictive -= r * r / (2.0 * (post.pred_var[s] + cfg_->vhat));
      prev_mean = post.fwd_mean[s];
    }
  }

  value.word_likelihood = word;
  value.pseudo_penalty = pseudo;
  value.predictive = predictive;
  value.total = word + pseudo + predictive;
  return value;
}

BoundValue BoundEvaluator::topic_objective_gradient(std::span<const double> beta_hat,
                                                    const TopicPosterior& post,
                                                    const ExpectedCounts& counts, int k,
                                                    std::span<double> grad) const {
  const auto& pat = *pattern_;
  const std::int64_t S = pat.slots();
  const int T = pat.tick_count;
  const auto slots = counts.topic_slots(k, S);
  const double* totals = counts.tick_totals.data() + static_cast<std::size_t>(k) * T;

  std::fill(grad.begin(), grad.end(), 0.0);
  if (T == 0 || S == 0) return {};

  std::vector<double> log_norms(T);
  tick_log_norms(post, log_norms);
  const BoundValue value = topic_objective_impl(beta_hat, post, counts, k, log_norms);

  // Adjoints of the forward means (a) and smoothed means (b) per slot.
  std::vector<double> a_adj(S, 0.0), b_adj(S, 0.0);

  const double v = cfg_->v;
  const double vhat = cfg_->vhat;

  for (std::int32_t w = 0; w < pat.vocab_size; ++w) {
    const std::int64_t begin = pat.word_offsets[w];
    const std::int64_t n = pat.word_offsets[w + 1] - begin;
    const auto ticks = pat.word_ticks(w);
    if (n == 0) continue;  // no parameters for this word

    // Word-likelihood contributions: u_t = ntilde - total * p flows to the
    // anchors of the smoothed mean at every tick.
    std::int64_t next = 0;
    for (int t = 0; t < T; ++t) {
      while (next < n && ticks[next] < t) ++next;
      double mean, var;
      double coeff = 0.0;  // weight of the right anchor for interior ticks
      enum { kObserved, kBefore, kInterior, kAfter } where;
      if (next < n && ticks[next] == t) {
        where = kObserved;
        mean = post.smooth_mean[begin + next];
        var = post.smooth_var[begin + next];
      } else if (next == 0) {
        where = kBefore;
        const double var_t = cfg_->v0 + v * grid_->elapsed(grid_->origin, grid_->stamps[t]);
        const double pred = post.pred_var[begin];
        coeff = var_t / pred;
        mean = (1.0 - coeff) * cfg_->prior_mean + coeff * post.smooth_mean[begin];
        var = var_t + coeff * coeff * (post.smooth_var[begin] - pred);
      } else if (next == n) {
        where = kAfter;
        const std::int64_t s = begin + n - 1;
        mean = post.fwd_mean[s];
        var = post.fwd_var[s] +
              v * grid_->elapsed(grid_->stamps[ticks[n - 1]], grid_->stamps[t]);
      } else {
        where = kInterior;
        const std::int64_t s = begin + next - 1;
        const double var_t =
            post.fwd_var[s] + v * grid_->elapsed(grid_->stamps[ticks[next - 1]], grid_->stamps[t]);
        const double pred = post.pred_var[begin + next];
        coeff = var_t / pred;
        mean = (1.0 - coeff) * post.fwd_mean[s] + coeff * post.smooth_mean[begin + next];
        var = var_t + coeff * coeff * (post.smooth_var[begin + next] - pred);
      }

      const double p = std::exp(mean + 0.5 * var - log_norms[t]);
      double u = -totals[t] * p;
      if (where == kObserved) u += slots[begin + next];

      switch (where) {
        case kObserved: b_adj[begin + next] += u; break;
        case kBefore: b_adj[begin] += coeff * u; break;
        case kAfter: a_adj[begin + n - 1] += u; break;
        case kInterior:
          a_adj[begin + next - 1] += (1.0 - coeff) * u;
          b_adj[begin + next] += coeff * u;
          break;
      }
    }

    // Direct quadratic terms.
    double prev_mean = cfg_->prior_mean;
    for (std::int64_t r = 0; r < n; ++r) {
      const std::int64_t s = begin + r;
      const double resid = (beta_hat[s] - post.smooth_mean[s]) / vhat;
      grad[s] -= resid;
      b_adj[s] += resid;
      const double resid_p = (beta_hat[s] - prev_mean) / (post.pred_var[s] + vhat);
      grad[s] -= resid_p;
      if (r > 0) a_adj[s - 1] += resid_p;
      prev_mean = post.fwd_mean[s];
    }

    // Smoother adjoint: b_r = (1 - g_r) a_r + g_r b_{r+1}, b_{n-1} = a_{n-1}.
    for (std::int64_t r = 0; r + 1 < n; ++r) {
      const std::int64_t s = begin + r;
      const double gain = post.fwd_var[s] / post.pred_var[s + 1];
      a_adj[s] += (1.0 - gain) * b_adj[s];
      b_adj[s + 1] += gain * b_adj[s];
    }
    a_adj[begin + n - 1] += b_adj[begin + n - 1];

    // Filter adjoint: a_r = c_r beta_hat_r + (1 - c_r) a_{r-1}.
    for (std::int64_t r = n - 1; r >= 0; --r) {
      const std::int64_t s = begin + r;
      const double c = post.pred_var[s] / (post.pred_var[s] + vhat);
      grad[s] += c * a_adj[s];
      if (r > 0) a_adj[s - 1] += (1.0 - c) * a_adj[s];
    }
  }

  for (std::int64_t s = 0; s < S; ++s) {
    if (!std::isfinite(grad[s])) {
      // Recover (word, tick) from the word-major slot for the error message.
      std::int32_t w = 0;
      while (pat.word_offsets[w + 1] <= s) ++w;
      throw NumericalError("non-finite gradient at topic " + std::to_string(k) + ", tick " +
                           std::to_string(pat.slot_tick[s]) + ", word " + std::to_string(w));
    }
  }
  return value;
}

BoundValue BoundEvaluator::objective(std::span<const double> params,
                                     const ExpectedCounts& counts) const {
  const std::int64_t S = pattern_->slots();
  BoundValue total;
  TopicPosterior post;
  for (int k = 0; k < counts.topics; ++k) {
    const auto beta_hat = params.subspan(static_cast<std::size_t>(k) * S,
                                         static_cast<std::size_t>(S));
    update_posterior(beta_hat, post);
    const BoundValue part = topic_objective(beta_hat, post, counts, k);
    total.word_likelihood += part.word_likelihood;
    total.pseudo_penalty += part.pseudo_penalty;
    total.predictive += part.predictive;
    total.total += part.total;
  }
  return total;
}

GradientBuffer BoundEvaluator::gradient(std::span<const double> params,
                                        const ExpectedCounts& counts) const {
  const std::int64_t S = pattern_->slots();
  GradientBuffer buffer;
  buffer.topics = counts.topics;
  buffer.values.assign(params.size(), 0.0);
  TopicPosterior post;
  for (int k = 0; k < counts.topics; ++k) {
    const auto offset = static_cast<std::size_t>(k) * S;
    const auto beta_hat = params.subspan(offset, static_cast<std::size_t>(S));
    update_posterior(beta_hat, post);
    topic_objective_gradient(beta_hat, post, counts, k,
                             std::span<double>(buffer.values.data() + offset,
                                               static_cast<std::size_t>(S)));
  }
  return buffer;
}

}  // namespace cdtm
