#include "cdtm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cdtm/docstep.hpp"
#include "cdtm/errors.hpp"

namespace cdtm {

namespace {

/// Topic means and log normalizers at one stamp: smoothed moments inside the
/// grid, forward propagation past it. The Jensen term log sum exp(sm + sV/2)
/// is evaluated over the full vocabulary.
struct TopicSnapshot {
  int topics = 0;
  std::int32_t vocab_size = 0;
  std::vector<double> means;     // topics x V
  std::vector<double> log_norm;  // topics
};

TopicSnapshot snapshot_at_stamp(const FittedModel& model, std::int64_t stamp) {
  TopicSnapshot snap;
  snap.topics = model.cfg.topics;
  snap.vocab_size = model.pattern.vocab_size;
  snap.means.resize(static_cast<std::size_t>(snap.topics) * snap.vocab_size);
  snap.log_norm.resize(snap.topics);

  BoundEvaluator eval(model.pattern, model.grid, model.cfg);
  for (int k = 0; k < snap.topics; ++k) {
    double max_val = -std::numeric_limits<double>::infinity();
    double scaled_sum = 0.0;
    for (std::int32_t w = 0; w < snap.vocab_size; ++w) {
      const auto [mean, var] =
          moments_at_stamp(eval.chain(model.posteriors[k], w), model.grid, model.cfg, stamp);
      snap.means[static_cast<std::size_t>(k) * snap.vocab_size + w] = mean;
      const double x = mean + 0.5 * var;
      if (x <= max_val) {
        scaled_sum += std::exp(x - max_val);
      } else {
        scaled_sum = scaled_sum * std::exp(max_val - x) + 1.0;
        max_val = x;
      }
    }
    snap.log_norm[k] = max_val + std::log(scaled_sum);
  }
  return snap;
}

/// Converged per-document bound under a snapshot, with fresh gamma/phi.
double score_document(const TopicSnapshot& snap, const ModelConfig& cfg,
                      std::span<const std::int32_t> words) {
  const int K = snap.topics;
  const std::size_t n_tokens = words.size();
  std::vector<double> ell(n_tokens * K);
  for (std::size_t n = 0; n < n_tokens; ++n) {
    for (int k = 0; k < K; ++k) {
      ell[n * K + k] =
          snap.means[static_cast<std::size_t>(k) * snap.vocab_size + words[n]] - snap.log_norm[k];
    }
  }
  std::vector<double> gamma(K, cfg.alpha + static_cast<double>(n_tokens) / K);
  std::vector<double> phi(n_tokens * K, 1.0 / K);
  return doc_estep(ell, K, cfg.alpha, cfg.doc_tol, cfg.max_doc_iterations, gamma, phi).bound;
}

}  // namespace

double doc_predictive_loglik(const FittedModel& model, std::span<const std::int32_t> words,
                             std::int64_t stamp) {
  if (words.empty()) throw DataError("cannot score an empty document");
  const TopicSnapshot snap = snapshot_at_stamp(model, stamp);
  return score_document(snap, model.cfg, words);
}

PerplexityReport predictive_perplexity(const BucketedCorpus& corpus, const ModelConfig& cfg,
                                       int eval_begin_tick, int eval_end_tick, RefitMode mode,
                                       const FittedModel* prefit, int threads) {
  const int T = corpus.grid.ticks();
  if (eval_begin_tick < 0 || eval_end_tick >= T || eval_begin_tick > eval_end_tick) {
    throw DataError("eval range [" + std::to_string(eval_begin_tick) + ", " +
                    std::to_string(eval_end_tick) + "] outside the grid [0, " + std::to_string(T) +
                    ")");
  }
  if (prefit && prefit->pattern.vocab_size != corpus.vocab->size()) {
    throw DataError("prefit model vocabulary does not match the corpus");
  }

  PerplexityReport report;
  FittedModel once_model;
  const FittedModel* shared = nullptr;
  if (mode == RefitMode::once) {
    if (prefit) {
      shared = prefit;
    } else {
      once_model = fit(prefix(corpus, eval_begin_tick), cfg, {threads});
      shared = &once_model;
    }
  }

  double total_logp = 0.0;
  std::int64_t total_tokens = 0;

  for (int t = eval_begin_tick; t <= eval_end_tick; ++t) {
    const auto& doc_ids = corpus.docs_at[t];
    if (doc_ids.empty()) {
      report.skipped_ticks.push_back(t);
      continue;
    }
    FittedModel local;
    const FittedModel* model = shared;
    if (mode == RefitMode::per_tick) {
      local = fit(prefix(corpus, t), cfg, {threads});
      model = &local;
    }
    const TopicSnapshot snap = snapshot_at_stamp(*model, corpus.grid.stamps[t]);

    PerplexityEntry entry;
    entry.tick = t;
    entry.stamp = corpus.grid.stamps[t];
    double mean_rate = 0.0;  // (1/|D_t|) sum_d log p / N_d
    for (const std::int32_t d : doc_ids) {
      const auto& words = corpus.docs[d].words;
      if (words.empty()) continue;
      const double logp = score_document(snap, model->cfg, words);
      mean_rate += logp / static_cast<double>(words.size());
      ++entry.doc_count;
      entry.token_count += static_cast<std::int64_t>(words.size());
      total_logp += logp;
      total_tokens += static_cast<std::int64_t>(words.size());
    }
    if (entry.doc_count == 0) {
      report.skipped_ticks.push_back(t);
      continue;
    }
    mean_rate /= entry.doc_count;
    entry.perplexity = std::exp(-mean_rate);
    report.total_docs += entry.doc_count;
    report.per_tick.push_back(entry);
  }

  report.total_tokens = total_tokens;
  report.averaged = total_tokens > 0 ? std::exp(-total_logp / static_cast<double>(total_tokens))
                                     : 0.0;
  return report;
}

namespace {

int argmax_tick(const FittedModel& model, std::span<const std::int32_t> words,
                std::span<const int> candidates) {
  double best = -std::numeric_limits<double>::infinity();
  int best_tick = candidates.empty() ? 0 : candidates[0];
  for (const int t : candidates) {
    const TopicSnapshot snap = snapshot_at_stamp(model, model.grid.stamps[t]);
    const double score = score_document(snap, model.cfg, words);
    if (score > best) {  // strict: ties keep the earlier tick
      best = score;
      best_tick = t;
    }
  }
  return best_tick;
}

std::vector<int> all_ticks(const FittedModel& model) {
  std::vector<int> ticks(model.grid.ticks());
  for (int t = 0; t < model.grid.ticks(); ++t) ticks[t] = t;
  return ticks;
}

}  // namespace

int predict_time_flat(const FittedModel& model, std::span<const std::int32_t> words) {
  if (words.empty()) throw DataError("cannot date an empty document");
  if (model.grid.ticks() == 0) throw DataError("model has an empty time grid");
  return argmax_tick(model, words, all_ticks(model));
}

int predict_time_hierarchical(std::span<const FittedModel* const> coarse_to_fine,
                              std::span<const std::int32_t> words, bool* fallback) {
  if (coarse_to_fine.empty()) throw DataError("hierarchical prediction needs at least one model");
  if (fallback) *fallback = false;

  int winner = predict_time_flat(*coarse_to_fine[0], words);
  for (std::size_t level = 1; level < coarse_to_fine.size(); ++level) {
    const FittedModel& coarse = *coarse_to_fine[level - 1];
    const FittedModel& fine = *coarse_to_fine[level];
    const std::int64_t lo = coarse.grid.stamps[winner];
    const std::int64_t hi = bucket_end(lo, coarse.grid.granularity);

    std::vector<int> candidates;
    for (int t = 0; t < fine.grid.ticks(); ++t) {
      if (fine.grid.stamps[t] >= lo && fine.grid.stamps[t] < hi) candidates.push_back(t);
    }
    if (candidates.empty()) {
      if (fallback) *fallback = true;
      winner = fine.grid.nearest_tick(lo);
      continue;
    }
    winner = argmax_tick(fine, words, candidates);
  }
  return winner;
}

TimePredictionReport time_prediction_report(std::span<const FittedModel* const> coarse_to_fine,
                                            std::span<const RawDocument> test_docs) {
  if (coarse_to_fine.empty()) throw DataError("time prediction needs at least one model");
  const FittedModel& finest = *coarse_to_fine.back();
  const auto& vocab = *finest.vocab;

  TimePredictionReport report;
  report.finest_ticks = finest.grid.ticks();
  report.random_baseline = random_baseline(finest.grid.ticks());

  double error_sum = 0.0;
  for (std::size_t d = 0; d < test_docs.size(); ++d) {
    std::vector<std::int32_t> words;
    words.reserve(test_docs[d].tokens.size());
    for (const auto& token : test_docs[d].tokens) {
      if (const auto id = vocab.lookup(token)) words.push_back(*id);
    }
    if (words.empty()) {
      ++report.skipped_all_oov;
      continue;
    }

    TimePredictionEntry entry;
    entry.doc_index = static_cast<int>(d);
    const std::int64_t bucket = bucket_start(test_docs[d].stamp, finest.grid.granularity);
    const int exact = finest.grid.find_tick(bucket);
    entry.true_tick = exact >= 0 ? exact : finest.grid.nearest_tick(bucket);

    if (coarse_to_fine.size() == 1) {
      entry.predicted_tick = predict_time_flat(finest, words);
    } else {
      entry.predicted_tick = predict_time_hierarchical(coarse_to_fine, words, &entry.fallback);
    }
    entry.abs_error = std::abs(entry.predicted_tick - entry.true_tick);
    error_sum += entry.abs_error;
    report.entries.push_back(entry);
  }
  if (!report.entries.empty()) {
    report.mean_abs_error = error_sum / static_cast<double>(report.entries.size());
  }
  return report;
}

double random_baseline(int ticks) {
  if (ticks < 1) throw DataError("random baseline needs at least one tick");
  const double T = ticks;
  return (T * T - 1.0) / (3.0 * T);
}

SyntheticData generate_synthetic(const ModelConfig& cfg, const SyntheticSpec& spec,
                                 std::uint64_t seed) {
  cfg.validate();
  if (spec.vocab_size < 1 || spec.ticks < 1 || spec.docs_per_tick < 1 || spec.doc_length < 1 ||
      spec.gap_seconds < 1) {
    throw std::invalid_argument("synthetic spec fields must be positive");
  }

  SyntheticData data;
  data.vocab_size = spec.vocab_size;
  data.grid.granularity = Granularity::raw;
  data.grid.stamps.resize(spec.ticks);
  for (int t = 0; t < spec.ticks; ++t) {
    data.grid.stamps[t] = spec.first_stamp + static_cast<std::int64_t>(t) * spec.gap_seconds;
  }
  // Same origin convention as bucket(): one raw grid unit before the first tick.
  data.grid.origin = previous_bucket(spec.first_stamp, Granularity::raw);

  const int K = cfg.topics;
  const int T = spec.ticks;
  const std::int32_t V = spec.vocab_size;

  std::mt19937_64 master(seed);

  // Ground-truth trajectories, one Brownian chain per (topic, word).
  data.beta.resize(static_cast<std::size_t>(K) * T * V);
  for (int k = 0; k < K; ++k) {
    for (std::int32_t w = 0; w < V; ++w) {
      const ChainSample sample = sample_chain(data.grid, cfg, master());
      for (int t = 0; t < T; ++t) {
        data.beta[(static_cast<std::size_t>(k) * T + t) * V + w] = sample.values[t];
      }
    }
  }

  // Topic-word distributions per tick.
  std::vector<double> probs(static_cast<std::size_t>(K) * T * V);
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < T; ++t) {
      const std::size_t off = (static_cast<std::size_t>(k) * T + t) * V;
      softmax_map(std::span<const double>(data.beta.data() + off, V),
                  std::span<double>(probs.data() + off, V));
    }
  }

  std::gamma_distribution<double> gamma_draw(cfg.alpha, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> theta(K);

  for (int t = 0; t < T; ++t) {
    for (int d = 0; d < spec.docs_per_tick; ++d) {
      double theta_sum = 0.0;
      for (int k = 0; k < K; ++k) {
        theta[k] = gamma_draw(master);
        theta_sum += theta[k];
      }
      for (int k = 0; k < K; ++k) {
        theta[k] /= theta_sum;
        data.theta.push_back(theta[k]);
      }

      RawDocument doc;
      doc.stamp = data.grid.stamps[t];
      doc.tokens.reserve(spec.doc_length);
      for (int n = 0; n < spec.doc_length; ++n) {
        // z ~ Mult(theta)
        double u = unit(master);
        int z = 0;
        for (; z + 1 < K; ++z) {
          if (u < theta[z]) break;
          u -= theta[z];
        }
        // w ~ Mult(pi(beta_{t,z}))
        const std::size_t off = (static_cast<std::size_t>(z) * T + t) * V;
        double uw = unit(master);
        std::int32_t w = 0;
        for (; w + 1 < V; ++w) {
          if (uw < probs[off + w]) break;
          uw -= probs[off + w];
        }
        doc.tokens.push_back("w" + std::to_string(w));
      }
      data.docs.push_back(std::move(doc));
    }
  }
  return data;
}

MemoryReport memory_report(const BucketedCorpus& corpus) {
  MemoryReport report;
  report.vocab_size = corpus.vocab ? corpus.vocab->size() : 0;
  report.ticks = corpus.grid.ticks();
  report.observed_cells = corpus.observed_cells();
  const double dense = static_cast<double>(report.vocab_size) * report.ticks;
  if (dense > 0.0) {
    report.sparsity = 1.0 - report.observed_cells / dense;
    report.avg_presence = report.observed_cells / dense;
  }
  if (report.observed_cells > 0) {
    report.dense_sparse_ratio = dense / static_cast<double>(report.observed_cells);
  }
  return report;
}

}  // namespace cdtm
