// Dense tick-by-tick reference for the sparse inference path. Everything
// here materializes the full V x T grid on purpose: plain arrays, plain
// loops, no shared code with the sparse implementation.

#include "cdtm/dense_oracle.hpp"

#include <cmath>
#include <string>

#include "cdtm/errors.hpp"

namespace cdtm {

namespace {

void check_cap(const SparsityPattern& pattern, int topics, std::int64_t cap) {
  const std::int64_t entries = dense_entries(pattern, topics);
  if (entries > cap) {
    throw DataError("dense oracle refused: " + std::to_string(entries) +
                    " entries exceed the cap of " + std::to_string(cap));
  }
}

// delta_{t,w} and beta_hat lookups as dense V x T tables for one topic.
struct DenseInputs {
  std::vector<char> observed;     // V x T
  std::vector<double> beta_hat;   // V x T
  std::vector<double> counts;     // V x T expected counts for one topic

  std::size_t at(std::int32_t w, int t, int T) const {
    return static_cast<std::size_t>(w) * T + t;
  }
};

DenseInputs densify(const SparsityPattern& pattern, std::span<const double> params,
                    const ExpectedCounts* counts, int k) {
  const int T = pattern.tick_count;
  const std::int64_t S = pattern.slots();
  DenseInputs dense;
  dense.observed.assign(static_cast<std::size_t>(pattern.vocab_size) * T, 0);
  dense.beta_hat.assign(static_cast<std::size_t>(pattern.vocab_size) * T, 0.0);
  dense.counts.assign(static_cast<std::size_t>(pattern.vocab_size) * T, 0.0);
  for (std::int32_t w = 0; w < pattern.vocab_size; ++w) {
    for (std::int64_t s = pattern.word_offsets[w]; s < pattern.word_offsets[w + 1]; ++s) {
      const std::size_t cell = dense.at(w, pattern.slot_tick[s], T);
      dense.observed[cell] = 1;
      dense.beta_hat[cell] = params[static_cast<std::size_t>(k) * S + s];
      if (counts) {
        dense.counts[cell] = counts->slot_values[static_cast<std::size_t>(k) * S + s];
      }
    }
  }
  return dense;
}

}  // namespace

std::int64_t dense_entries(const SparsityPattern& pattern, int topics) {
  return static_cast<std::int64_t>(topics) * pattern.vocab_size * pattern.tick_count;
}

DenseMoments dense_moments(const SparsityPattern& pattern, std::span<const double> params,
                           const TimeGrid& grid, const ModelConfig& cfg, std::int64_t cap) {
  check_cap(pattern, cfg.topics, cap);
  DenseMoments out;
  out.topics = cfg.topics;
  out.vocab_size = pattern.vocab_size;
  out.ticks = pattern.tick_count;
  const std::size_t cells =
      static_cast<std::size_t>(cfg.topics) * pattern.vocab_size * pattern.tick_count;
  out.pred_var.resize(cells);
  out.fwd_mean.resize(cells);
  out.fwd_var.resize(cells);
  out.smooth_mean.resize(cells);
  out.smooth_var.resize(cells);

  const int T = pattern.tick_count;
  for (int k = 0; k < cfg.topics; ++k) {
    const DenseInputs dense = densify(pattern, params, nullptr, k);
    for (std::int32_t w = 0; w < pattern.vocab_size; ++w) {
      // Forward recursion over every tick.
      double mean = cfg.prior_mean;
      double var = cfg.v0;
      for (int t = 0; t < T; ++t) {
        const std::size_t cell = out.index(k, w, t);
        const double pred = var + cfg.v * grid.gap(t);
        out.pred_var[cell] = pred;
        if (dense.observed[dense.at(w, t, T)]) {
          const double y = dense.beta_hat[dense.at(w, t, T)];
          mean = (y * pred + cfg.vhat * mean) / (pred + cfg.vhat);
          var = cfg.vhat * pred / (pred + cfg.vhat);
        } else {
          var = pred;
        }
        out.fwd_mean[cell] = mean;
        out.fwd_var[cell] = var;
      }
      // Backward recursion over every tick.
      if (T > 0) {
        const std::size_t last = out.index(k, w, T - 1);
        out.smooth_mean[last] = out.fwd_mean[last];
        out.smooth_var[last] = out.fwd_var[last];
        for (int t = T - 1; t > 0; --t) {
          const std::size_t cur = out.index(k, w, t);
          const std::size_t prev = out.index(k, w, t - 1);
          const double gain = out.fwd_var[prev] / out.pred_var[cur];
          out.smooth_mean[prev] = out.fwd_mean[prev] * (cfg.v * grid.gap(t) / out.pred_var[cur]) +
                                  out.smooth_mean[cur] * gain;
          out.smooth_var[prev] =
              out.fwd_var[prev] + gain * gain * (out.smooth_var[cur] - out.pred_var[cur]);
        }
      }
    }
  }
  return out;
}

BoundValue dense_objective(const SparsityPattern& pattern, std::span<const double> params,
                           const ExpectedCounts& counts, const TimeGrid& grid,
                           const ModelConfig& cfg, std::int64_t cap) {
  const DenseMoments moments = dense_moments(pattern, params, grid, cfg, cap);
  const int T = pattern.tick_count;
  const std::int32_t V = pattern.vocab_size;

  BoundValue value;
  for (int k = 0; k < counts.topics; ++k) {
    const DenseInputs dense = densify(pattern, params, &counts, k);

    for (int t = 0; t < T; ++t) {
      // Two-pass log-sum-exp over the dense row.
      double max_val = -1e300;
      for (std::int32_t w = 0; w < V; ++w) {
        const std::size_t cell = moments.index(k, w, t);
        max_val = std::max(max_val, moments.smooth_mean[cell] + 0.5 * moments.smooth_var[cell]);
      }
      double sum = 0.0;
      double linear = 0.0;
      double total = 0.0;
      for (std::int32_t w = 0; w < V; ++w) {
        const std::size_t cell = moments.index(k, w, t);
        sum += std::exp(moments.smooth_mean[cell] + 0.5 * moments.smooth_var[cell] - max_val);
        linear += dense.counts[dense.at(w, t, T)] * moments.smooth_mean[cell];
        total += dense.counts[dense.at(w, t, T)];
      }
      value.word_likelihood += linear - total * (max_val + std::log(sum));
    }

    for (std::int32_t w = 0; w < V; ++w) {
      double prev_mean = cfg.prior_mean;
      for (int t = 0; t < T; ++t) {
        const std::size_t cell = moments.index(k, w, t);
        if (dense.observed[dense.at(w, t, T)]) {
          const double y = dense.beta_hat[dense.at(w, t, T)];
          const double r_pseudo = y - moments.smooth_mean[cell];
          value.pseudo_penalty -= r_pseudo * r_pseudo / (2.0 * cfg.vhat);
          const double r_pred = y - prev_mean;
          value.predictive -= r_pred * r_pred / (2.0 * (moments.pred_var[cell] + cfg.vhat));
        }
        prev_mean = moments.fwd_mean[cell];
      }
    }
  }
  value.total = value.word_likelihood + value.pseudo_penalty + value.predictive;
  return value;
}

std::vector<double> dense_gradient(const SparsityPattern& pattern, std::span<const double> params,
                                   const ExpectedCounts& counts, const TimeGrid& grid,
                                   const ModelConfig& cfg, std::int64_t cap) {
  const DenseMoments moments = dense_moments(pattern, params, grid, cfg, cap);
  const int T = pattern.tick_count;
  const std::int32_t V = pattern.vocab_size;
  const std::int64_t S = pattern.slots();

  std::vector<double> grad(params.size(), 0.0);
  if (T == 0) return grad;

  for (int k = 0; k < counts.topics; ++k) {
    const DenseInputs dense = densify(pattern, params, &counts, k);

    // d(word term)/d(smooth_mean) for every dense cell.
    std::vector<double> sm_adj(static_cast<std::size_t>(V) * T, 0.0);
    for (int t = 0; t < T; ++t) {
      double max_val = -1e300;
      for (std::int32_t w = 0; w < V; ++w) {
        const std::size_t cell = moments.index(k, w, t);
        max_val = std::max(max_val, moments.smooth_mean[cell] + 0.5 * moments.smooth_var[cell]);
      }
      double sum = 0.0;
      double total = 0.0;
      for (std::int32_t w = 0; w < V; ++w) {
        const std::size_t cell = moments.index(k, w, t);
        sum += std::exp(moments.smooth_mean[cell] + 0.5 * moments.smooth_var[cell] - max_val);
        total += dense.counts[dense.at(w, t, T)];
      }
      for (std::int32_t w = 0; w < V; ++w) {
        const std::size_t cell = moments.index(k, w, t);
        const double p =
            std::exp(moments.smooth_mean[cell] + 0.5 * moments.smooth_var[cell] - max_val) / sum;
        sm_adj[dense.at(w, t, T)] = dense.counts[dense.at(w, t, T)] - total * p;
      }
    }

    for (std::int32_t w = 0; w < V; ++w) {
      // Direct quadratic contributions.
      std::vector<double> fm_adj(T, 0.0);        // adjoint of fwd_mean
      std::vector<double> grad_cell(T, 0.0);     // d/d beta_hat at (w, t)
      double prev_mean = cfg.prior_mean;
      for (int t = 0; t < T; ++t) {
        const std::size_t cell = moments.index(k, w, t);
        if (dense.observed[dense.at(w, t, T)]) {
          const double y = dense.beta_hat[dense.at(w, t, T)];
          const double r_pseudo = (y - moments.smooth_mean[cell]) / cfg.vhat;
          grad_cell[t] -= r_pseudo;
          sm_adj[dense.at(w, t, T)] += r_pseudo;
          const double r_pred = (y - prev_mean) / (moments.pred_var[cell] + cfg.vhat);
          grad_cell[t] -= r_pred;
          if (t > 0) fm_adj[t - 1] += r_pred;
        }
        prev_mean = moments.fwd_mean[cell];
      }

      // Adjoint of the backward recursion, walked forward.
      // smooth_mean[T-1] = fwd_mean[T-1]; for t < T-1:
      // smooth_mean[t] = fwd_mean[t]*(v*gap/P) + smooth_mean[t+1]*gain.
      for (int t = 0; t < T; ++t) {
        const double a = sm_adj[dense.at(w, t, T)];
        if (t == T - 1) {
          fm_adj[t] += a;
        } else {
          const std::size_t next = moments.index(k, w, t + 1);
          const double gain = moments.fwd_var[moments.index(k, w, t)] / moments.pred_var[next];
          fm_adj[t] += a * (cfg.v * grid.gap(t + 1) / moments.pred_var[next]);
          sm_adj[dense.at(w, t + 1, T)] += a * gain;
        }
      }

      // Adjoint of the forward recursion, walked backward.
      // Observed: fwd_mean[t] = (beta_hat*P + vhat*fwd_mean[t-1])/(P + vhat);
      // unobserved: fwd_mean[t] = fwd_mean[t-1].
      for (int t = T - 1; t >= 0; --t) {
        const double a = fm_adj[t];
        if (a == 0.0) continue;
        const std::size_t cell = moments.index(k, w, t);
        if (dense.observed[dense.at(w, t, T)]) {
          const double denom = moments.pred_var[cell] + cfg.vhat;
          grad_cell[t] += a * moments.pred_var[cell] / denom;
          if (t > 0) fm_adj[t - 1] += a * cfg.vhat / denom;
        } else if (t > 0) {
          fm_adj[t - 1] += a;
        }
      }

      // Scatter back to the sparse slot layout.
      for (std::int64_t s = pattern.word_offsets[w]; s < pattern.word_offsets[w + 1]; ++s) {
        grad[static_cast<std::size_t>(k) * S + s] = grad_cell[pattern.slot_tick[s]];
      }
    }
  }
  return grad;
}

}  // namespace cdtm
