#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cdtm/bound.hpp"
#include "cdtm/corpus.hpp"
#include "cdtm/pattern.hpp"

namespace cdtm {

struct FitDiagnostics {
  std::vector<double> objective_trace;  // full bound after each outer iteration
  int outer_iterations = 0;
  std::int64_t variance_clamps = 0;
  bool symmetric_start = false;       // all topics initialized identically
  bool line_search_warning = false;
  std::string failure;  // non-empty when fitting aborted (non-finite objective)
  double wall_seconds = 0.0;
};

struct FittedModel {
  ModelConfig cfg;
  TimeGrid grid;
  std::shared_ptr<const Vocabulary> vocab;
  SparsityPattern pattern;
  std::vector<double> params;  // topics x slots beta_hat, topic-major
  std::vector<TopicPosterior> posteriors;
  FitDiagnostics diagnostics;

  std::span<const double> topic_params(int k) const {
    return {params.data() + static_cast<std::size_t>(k) * pattern.slots(),
            static_cast<std::size_t>(pattern.slots())};
  }
  ChainView chain(int k, std::int32_t word) const;
};

/// Per-document variational state, flat over docs.
struct DocStates {
  int topics = 0;
  std::vector<double> gammas;            // docs x topics
  std::vector<std::vector<double>> phis; // per doc: tokens x topics
};

struct InitState {
  std::vector<double> params;  // topics x slots
  DocStates docs;
  bool symmetric_start = false;
};

/// beta_hat_{t,k,w} = log((n_{t,w} + 0.5) / (n_t + 0.5 V)) plus seeded
/// Gaussian jitter (std cfg.jitter_std) to break topic symmetry;
/// gamma = alpha + N_d / K, phi uniform.
InitState initialize(const BucketedCorpus& corpus, const SparsityPattern& pattern,
                     const ModelConfig& cfg, std::uint64_t seed);

struct FitOptions {
  int threads = 1;
};

/// Coordinate ascent: E-step over documents, phi-weighted count refresh,
/// then per-topic CG over beta_hat; stops when the full bound's relative
/// change drops below cfg.outer_tol or max_outer_iterations is hit.
/// Handles empty corpora (returns the prior-only model). A non-finite
/// objective aborts the loop: the model rolls back to the last finite state
/// and diagnostics.failure carries the error report.
FittedModel fit(const BucketedCorpus& corpus, const ModelConfig& cfg, const FitOptions& = {});

/// Versioned binary container (see docs/model-format.md). Round-trips all
/// parameters exactly; posteriors are recomputed on load.
void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

struct TopicDistributions {
  int topics = 0;
  std::int32_t vocab_size = 0;
  std::vector<double> probs;  // topics x V, rows sum to 1
  bool extrapolated = false;  // stamp fell outside the grid range
};

/// pi(sm_{t,k,.}) per topic at a grid tick.
TopicDistributions posterior_topics(const FittedModel& model, int tick);

/// Same at an arbitrary stamp via skip interpolation; outside the grid the
/// boundary propagation applies and `extrapolated` is set.
TopicDistributions posterior_topics_at_stamp(const FittedModel& model, std::int64_t stamp);

}  // namespace cdtm
