#include "cdtm/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <random>

#include "cdtm/docstep.hpp"
#include "cdtm/errors.hpp"
#include "cdtm/optimizer.hpp"

namespace cdtm {

ChainView FittedModel::chain(int k, std::int32_t word) const {
  BoundEvaluator eval(pattern, grid, cfg);
  return eval.chain(posteriors[k], word);
}

InitState initialize(const BucketedCorpus& corpus, const SparsityPattern& pattern,
                     const ModelConfig& cfg, std::uint64_t seed) {
  const std::int64_t S = pattern.slots();
  const int K = cfg.topics;
  const std::int32_t V = pattern.vocab_size;

  InitState state;
  state.params.resize(static_cast<std::size_t>(K) * S);

  // Smoothed log empirical frequency at each observed slot.
  std::vector<double> base(S);
  for (std::int64_t s = 0; s < S; ++s) {
    const double n_tw = static_cast<double>(pattern.slot_count[s]);
    const double n_t = static_cast<double>(corpus.tick_totals[pattern.slot_tick[s]]);
    base[s] = std::log((n_tw + 0.5) / (n_t + 0.5 * V));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int k = 0; k < K; ++k) {
    for (std::int64_t s = 0; s < S; ++s) {
      const double jitter = cfg.jitter_std > 0.0 ? cfg.jitter_std * noise(rng) : 0.0;
      state.params[static_cast<std::size_t>(k) * S + s] = base[s] + jitter;
    }
  }

  state.symmetric_start = K > 1;
  for (int k = 1; k < K && state.symmetric_start; ++k) {
    for (std::int64_t s = 0; s < S; ++s) {
      if (state.params[static_cast<std::size_t>(k) * S + s] != state.params[s]) {
        state.symmetric_start = false;
        break;
      }
    }
  }

  state.docs.topics = K;
  state.docs.gammas.resize(corpus.docs.size() * static_cast<std::size_t>(K));
  state.docs.phis.resize(corpus.docs.size());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto tokens = corpus.docs[d].words.size();
    for (int k = 0; k < K; ++k) {
      state.docs.gammas[d * K + k] = cfg.alpha + static_cast<double>(tokens) / K;
    }
    state.docs.phis[d].assign(tokens * static_cast<std::size_t>(K), 1.0 / K);
  }
  return state;
}

namespace {

struct EStepTotals {
  double doc_bounds = 0.0;  // sum of per-document bounds
  double brackets = 0.0;    // doc bounds minus their word terms (beta_hat-free)
};

// Flat slot index of every token of every document; -1 never occurs for
// training corpora (the pattern is built from the same counts).
std::vector<std::vector<std::int64_t>> token_slots(const BucketedCorpus& corpus,
                                                   const SparsityPattern& pattern) {
  std::vector<std::vector<std::int64_t>> slots(corpus.docs.size());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& doc = corpus.docs[d];
    slots[d].reserve(doc.words.size());
    for (const std::int32_t w : doc.words) {
      slots[d].push_back(pattern.find_slot(w, doc.tick));
    }
  }
  return slots;
}

class Trainer {
 public:
  Trainer(const BucketedCorpus& corpus, const SparsityPattern& pattern, const ModelConfig& cfg,
          int threads)
      : corpus_(corpus),
        pattern_(pattern),
        cfg_(cfg),
        threads_(std::max(1, threads)),
        evaluator_(pattern, corpus.grid, cfg),
        slots_(token_slots(corpus, pattern)) {
    posteriors_.resize(cfg.topics);
    log_norms_.assign(static_cast<std::size_t>(cfg.topics) * pattern.tick_count, 0.0);
  }

  const BoundEvaluator& evaluator() const { return evaluator_; }
  std::vector<TopicPosterior>& posteriors() { return posteriors_; }
  ChainDiagnostics& chain_diag() { return diag_; }

  void refresh_posteriors(std::span<const double> params) {
    const std::int64_t S = pattern_.slots();
    for (int k = 0; k < cfg_.topics; ++k) {
      evaluator_.update_posterior(params.subspan(static_cast<std::size_t>(k) * S,
                                                 static_cast<std::size_t>(S)),
                                  posteriors_[k], &diag_);
      if (pattern_.tick_count > 0) {
        evaluator_.tick_log_norms(
            posteriors_[k],
            std::span<double>(log_norms_.data() +
                                  static_cast<std::size_t>(k) * pattern_.tick_count,
                              static_cast<std::size_t>(pattern_.tick_count)));
      }
    }
  }

  // One variational E-step over all documents (phi/gamma warm-started).
  EStepTotals estep(DocStates& docs) const {
    const std::size_t D = corpus_.docs.size();
    std::vector<double> bounds(D, 0.0), brackets(D, 0.0);

    const auto run = [&](std::size_t begin, std::size_t end) {
      const int K = cfg_.topics;
      std::vector<double> ell;
      for (std::size_t d = begin; d < end; ++d) {
        const auto& doc = corpus_.docs[d];
        const std::size_t n_tokens = doc.words.size();
        std::span<double> gamma(docs.gammas.data() + d * K, K);
        std::span<double> phi(docs.phis[d]);
        if (n_tokens == 0) {
          for (int k = 0; k < K; ++k) gamma[k] = cfg_.alpha;
          continue;
        }
        ell.resize(n_tokens * K);
        for (std::size_t n = 0; n < n_tokens; ++n) {
          const std::int64_t slot = slots_[d][n];
          for (int k = 0; k < K; ++k) {
            ell[n * K + k] =
                posteriors_[k].smooth_mean[slot] -
                log_norms_[static_cast<std::size_t>(k) * pattern_.tick_count + doc.tick];
          }
        }
        bounds[d] = doc_estep(ell, K, cfg_.alpha, cfg_.doc_tol, cfg_.max_doc_iterations, gamma,
                              phi).bound;
        double word_part = 0.0;
        for (std::size_t i = 0; i < ell.size(); ++i) word_part += phi[i] * ell[i];
        brackets[d] = bounds[d] - word_part;
      }
    };

    if (threads_ == 1 || D < 2 * static_cast<std::size_t>(threads_)) {
      run(0, D);
    } else {
      const std::size_t chunk = (D + threads_ - 1) / threads_;
      std::vector<std::future<void>> tasks;
      for (std::size_t begin = 0; begin < D; begin += chunk) {
        const std::size_t end = std::min(D, begin + chunk);
        tasks.push_back(std::async(std::launch::async, run, begin, end));
      }
      for (auto& t : tasks) t.get();
    }

    EStepTotals totals;  // fixed doc-order reduction
    for (std::size_t d = 0; d < D; ++d) {
      totals.doc_bounds += bounds[d];
      totals.brackets += brackets[d];
    }
    return totals;
  }

  ExpectedCounts expected_counts(const DocStates& docs) const {
    const int K = cfg_.topics;
    const std::int64_t S = pattern_.slots();
    ExpectedCounts counts;
    counts.topics = K;
    counts.slot_values.assign(static_cast<std::size_t>(K) * S, 0.0);
    counts.tick_totals.assign(static_cast<std::size_t>(K) * pattern_.tick_count, 0.0);
    for (std::size_t d = 0; d < corpus_.docs.size(); ++d) {
      const auto& doc = corpus_.docs[d];
      const auto& phi = docs.phis[d];
      for (std::size_t n = 0; n < doc.words.size(); ++n) {
        const std::int64_t slot = slots_[d][n];
        for (int k = 0; k < K; ++k) {
          counts.slot_values[static_cast<std::size_t>(k) * S + slot] += phi[n * K + k];
          counts.tick_totals[static_cast<std::size_t>(k) * pattern_.tick_count + doc.tick] +=
              phi[n * K + k];
        }
      }
    }
    return counts;
  }

  // Per-topic CG over beta_hat; returns the final objective values.
  struct MStepOutcome {
    double objective_sum = 0.0;
    bool line_search_warning = false;
  };
  MStepOutcome mstep(std::vector<double>& params, const ExpectedCounts& counts) {
    const std::int64_t S = pattern_.slots();
    const int K = cfg_.topics;
    CgSettings settings;
    settings.max_iterations = cfg_.cg_iterations;
    settings.grad_tolerance = cfg_.cg_grad_tol;

    std::vector<CgResult> results(K);
    const auto run_topic = [&](int k) {
      TopicPosterior scratch;
      const Objective f = [&, k](std::span<const double> x) {
        evaluator_.update_posterior(x, scratch);
        return evaluator_.topic_objective(x, scratch, counts, k).total;
      };
      const Gradient g = [&, k](std::span<const double> x, std::span<double> out) {
        evaluator_.update_posterior(x, scratch);
        evaluator_.topic_objective_gradient(x, scratch, counts, k, out);
      };
      const std::span<const double> x0(params.data() + static_cast<std::size_t>(k) * S,
                                       static_cast<std::size_t>(S));
      results[k] = maximize(f, g, x0, settings);
    };

    if (threads_ == 1 || K == 1) {
      for (int k = 0; k < K; ++k) run_topic(k);
    } else {
      std::vector<std::future<void>> tasks;
      for (int k = 0; k < K; ++k) tasks.push_back(std::async(std::launch::async, run_topic, k));
      for (auto& t : tasks) t.get();
    }

    MStepOutcome outcome;
    for (int k = 0; k < K; ++k) {
      std::copy(results[k].x.begin(), results[k].x.end(),
                params.begin() + static_cast<std::size_t>(k) * S);
      outcome.objective_sum += results[k].trace.back();
      outcome.line_search_warning |= results[k].line_search_warning;
    }
    return outcome;
  }

 private:
  const BucketedCorpus& corpus_;
  const SparsityPattern& pattern_;
  const ModelConfig& cfg_;
  int threads_;
  BoundEvaluator evaluator_;
  std::vector<std::vector<std::int64_t>> slots_;
  std::vector<TopicPosterior> posteriors_;
  std::vector<double> log_norms_;  // topics x ticks
  ChainDiagnostics diag_;
};

}  // namespace

FittedModel fit(const BucketedCorpus& corpus, const ModelConfig& cfg, const FitOptions& options) {
  cfg.validate();
  const auto start_time = std::chrono::steady_clock::now();

  FittedModel model;
  model.cfg = cfg;
  model.grid = corpus.grid;
  model.vocab = corpus.vocab;
  model.pattern = SparsityPattern::from_corpus(corpus);

  Trainer trainer(corpus, model.pattern, cfg, options.threads);

  InitState state = initialize(corpus, model.pattern, cfg, cfg.seed);
  model.diagnostics.symmetric_start = state.symmetric_start;
  model.params = std::move(state.params);

  if (model.pattern.slots() == 0 || corpus.docs.empty()) {
    // Prior-only model: nothing to fit, but posteriors must exist.
    trainer.refresh_posteriors(model.params);
    model.posteriors = std::move(trainer.posteriors());
    return model;
  }

  trainer.refresh_posteriors(model.params);

  const auto abort_fit = [&](std::vector<double> params, const std::string& why) {
    model.params = std::move(params);
    trainer.refresh_posteriors(model.params);
    model.posteriors = std::move(trainer.posteriors());
    model.diagnostics.variance_clamps = trainer.chain_diag().variance_clamps;
    model.diagnostics.failure = why;
    return std::move(model);
  };

  // Trace entry 0: the bound at initialization (beta_hat untouched, documents
  // at their first E-step state so every term is evaluated consistently).
  EStepTotals totals = trainer.estep(state.docs);
  ExpectedCounts counts = trainer.expected_counts(state.docs);
  {
    const BoundValue at_init = trainer.evaluator().objective(model.params, counts);
    model.diagnostics.objective_trace.push_back(totals.brackets + at_init.total);
    if (!std::isfinite(model.diagnostics.objective_trace.back())) {
      return abort_fit(std::move(model.params), "objective non-finite at initialization");
    }
  }

  std::vector<double> last_good = model.params;
  double previous = model.diagnostics.objective_trace.back();
  for (int iter = 0; iter < cfg.max_outer_iterations; ++iter) {
    const auto mstep = trainer.mstep(model.params, counts);
    model.diagnostics.line_search_warning |= mstep.line_search_warning;

    const double full = totals.brackets + mstep.objective_sum;
    model.diagnostics.objective_trace.push_back(full);
    model.diagnostics.outer_iterations = iter + 1;

    if (!std::isfinite(full)) {
      return abort_fit(std::move(last_good), "objective became non-finite at outer iteration " +
                                                 std::to_string(iter + 1));
    }
    last_good = model.params;

    const double scale = std::max({1.0, std::abs(full), std::abs(previous)});
    const bool converged = std::abs(full - previous) / scale < cfg.outer_tol;
    previous = full;

    trainer.refresh_posteriors(model.params);
    if (converged) break;
    totals = trainer.estep(state.docs);
    counts = trainer.expected_counts(state.docs);
  }

  model.posteriors = std::move(trainer.posteriors());
  model.diagnostics.variance_clamps = trainer.chain_diag().variance_clamps;
  model.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return model;
}

TopicDistributions posterior_topics_at_stamp(const FittedModel& model, std::int64_t stamp) {
  TopicDistributions dist;
  dist.topics = model.cfg.topics;
  dist.vocab_size = model.pattern.vocab_size;
  dist.extrapolated = model.grid.ticks() == 0 || stamp < model.grid.stamps.front() ||
                      stamp > model.grid.stamps.back();
  dist.probs.resize(static_cast<std::size_t>(dist.topics) * dist.vocab_size);

  BoundEvaluator eval(model.pattern, model.grid, model.cfg);
  std::vector<double> natural(dist.vocab_size);
  for (int k = 0; k < dist.topics; ++k) {
    for (std::int32_t w = 0; w < dist.vocab_size; ++w) {
      natural[w] =
          moments_at_stamp(eval.chain(model.posteriors[k], w), model.grid, model.cfg, stamp).first;
    }
    softmax_map(natural, std::span<double>(dist.probs.data() +
                                               static_cast<std::size_t>(k) * dist.vocab_size,
                                           static_cast<std::size_t>(dist.vocab_size)));
  }
  return dist;
}

TopicDistributions posterior_topics(const FittedModel& model, int tick) {
  if (tick < 0 || tick >= model.grid.ticks()) {
    throw DataError("tick " + std::to_string(tick) + " outside the model grid [0, " +
                    std::to_string(model.grid.ticks()) + ")");
  }
  return posterior_topics_at_stamp(model, model.grid.stamps[tick]);
}

}  // namespace cdtm
