#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cdtm/inference.hpp"

namespace cdtm {

struct PerplexityEntry {
  int tick = 0;
  std::int64_t stamp = 0;
  int doc_count = 0;
  std::int64_t token_count = 0;
  double perplexity = 0.0;  // exp{-(1/|D_t|) sum_d log p(w_d)/N_d}
};

struct PerplexityReport {
  std::vector<PerplexityEntry> per_tick;
  std::vector<int> skipped_ticks;  // eval ticks with no documents
  double averaged = 0.0;           // exp{-sum log p / sum N}, token-weighted
  std::int64_t total_docs = 0;
  std::int64_t total_tokens = 0;
};

enum class RefitMode { per_tick, once };

/// Predictive perplexity of the documents at each eval tick given all data
/// before it. `per_tick` refits on every prefix; `once` fits a single model
/// on the prefix before the first eval tick (or uses `prefit` when given)
/// and reuses it across the range.
PerplexityReport predictive_perplexity(const BucketedCorpus& corpus, const ModelConfig& cfg,
                                       int eval_begin_tick, int eval_end_tick, RefitMode mode,
                                       const FittedModel* prefit = nullptr, int threads = 1);

/// log p(words | model) at a stamp, via the converged per-document bound
/// with topic log-probabilities from forward-propagated moments (mean
/// carried past the data, variance grown by v*elapsed).
double doc_predictive_loglik(const FittedModel& model, std::span<const std::int32_t> words,
                             std::int64_t stamp);

struct TimePredictionEntry {
  int doc_index = 0;
  int true_tick = 0;
  int predicted_tick = 0;
  double abs_error = 0.0;  // |predicted - true| in grid (tick-index) units
  bool fallback = false;   // hierarchical search fell back to a coarser level
};

struct TimePredictionReport {
  std::vector<TimePredictionEntry> entries;
  double mean_abs_error = 0.0;
  double random_baseline = 0.0;
  int finest_ticks = 0;
  std::int64_t skipped_all_oov = 0;
};

/// Most likely grid tick for the document: argmax over ticks of the
/// converged document bound with smoothed topic moments at that tick. Ties
/// break toward the earlier tick. Throws DataError when `words` is empty.
int predict_time_flat(const FittedModel& model, std::span<const std::int32_t> words);

/// Coarse-to-fine search: each finer search is restricted to the ticks
/// whose stamps fall inside the coarser winner's bucket. When a finer level
/// has no such ticks the coarse winner maps to the nearest finer tick and
/// `fallback` is set. Returns the finest-level tick.
int predict_time_hierarchical(std::span<const FittedModel* const> coarse_to_fine,
                              std::span<const std::int32_t> words, bool* fallback = nullptr);

/// Scores every test document against every level. Models must share one
/// vocabulary; test documents are mapped against it (OOV dropped, all-OOV
/// documents skipped and counted).
TimePredictionReport time_prediction_report(std::span<const FittedModel* const> coarse_to_fine,
                                            std::span<const RawDocument> test_docs);

/// Expected |i - j| under uniform truth and uniform guess over T ticks:
/// (T^2 - 1) / (3T).
double random_baseline(int ticks);

struct SyntheticSpec {
  std::int32_t vocab_size = 10;
  int ticks = 10;
  std::int64_t first_stamp = 0;
  std::int64_t gap_seconds = 1;  // raw-granularity grid with uniform gaps
  int docs_per_tick = 5;
  int doc_length = 20;
};

struct SyntheticData {
  std::vector<RawDocument> docs;
  TimeGrid grid;
  std::int32_t vocab_size = 0;
  std::vector<double> beta;   // topics x ticks x V ground-truth trajectories
  std::vector<double> theta;  // docs x topics

  double beta_at(int k, int t, std::int32_t w) const {
    return beta[(static_cast<std::size_t>(k) * grid.ticks() + t) * vocab_size + w];
  }
};

/// Samples the generative process: Brownian chains, theta ~ Dir(alpha),
/// z ~ Mult(theta), w ~ Mult(pi(beta_{t,z})). Deterministic per seed.
SyntheticData generate_synthetic(const ModelConfig& cfg, const SyntheticSpec& spec,
                                 std::uint64_t seed);

struct MemoryReport {
  std::int64_t vocab_size = 0;
  std::int64_t ticks = 0;
  std::int64_t observed_cells = 0;  // sum delta
  double sparsity = 0.0;            // 1 - cells / (V T)
  double dense_sparse_ratio = 0.0;  // V T / cells
  double avg_presence = 0.0;        // fraction of ticks an average term occupies
};

MemoryReport memory_report(const BucketedCorpus& corpus);

}  // namespace cdtm
