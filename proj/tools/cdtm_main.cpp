// cdtm: fit continuous-time dynamic topic models and evaluate them
// (predictive perplexity, document dating, topic export, synthetic data).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdtm/dense_oracle.hpp"
#include "cdtm/errors.hpp"
#include "cdtm/eval.hpp"

using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string corpus_path;
  std::string format = "iso";
  bool lowercase = false;
  std::string granularity = "day";

  int topics = 1;
  double v_total = 1.0;
  double v0 = 1.0;
  double prior_mean = 0.0;
  double alpha = 1.0;
  double vhat = 1.0;
  double outer_tol = 1e-4;
  int max_outer = 100;
  int cg_iters = 20;
  double jitter_std = 0.1;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int threads = 1;
};

void add_model_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--granularity", opt.granularity, "Bucketing resolution")
      ->check(CLI::IsMember({"hour", "day", "week", "month", "raw"}))
      ->capture_default_str();
  cmd->add_option("--topics,-k", opt.topics, "Number of topics K")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  cmd->add_option("--v-total", opt.v_total,
                  "Diffusion variance across the whole observed period (divided by the period "
                  "length to obtain the per-unit variance, so granularities stay comparable)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--v0", opt.v0, "Prior variance of the initial state")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--prior-mean", opt.prior_mean, "Prior mean of the initial state")
      ->capture_default_str();
  cmd->add_option("--alpha", opt.alpha, "Symmetric Dirichlet concentration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--vhat", opt.vhat, "Pseudo-observation variance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--outer-tol", opt.outer_tol,
                  "Relative objective change stopping the outer loop")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-outer", opt.max_outer, "Outer iteration cap")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  cmd->add_option("--cg-iters", opt.cg_iters, "Conjugate-gradient budget per topic per outer step")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  cmd->add_option("--jitter-std", opt.jitter_std, "Topic-splitting jitter at initialization")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Seed for all randomness")->capture_default_str();
  cmd->add_flag("--deterministic", opt.deterministic,
                "Byte-identical outputs for identical inputs and seed");
  cmd->add_option("--threads", opt.threads, "Worker threads (results independent of the count)")
      ->check(CLI::Range(1, 4096))
      ->capture_default_str();
}

void add_corpus_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--corpus", opt.corpus_path, "Corpus file: one `stamp<TAB>tokens` per line")
      ->required();
  cmd->add_option("--format", opt.format, "Stamp format: ISO-8601 or integer epoch seconds")
      ->check(CLI::IsMember({"iso", "epoch"}))
      ->capture_default_str();
  cmd->add_flag("--lowercase", opt.lowercase, "Lowercase tokens while loading");
}

cdtm::LoadOptions load_options(const CommonOptions& opt) {
  cdtm::LoadOptions load;
  load.format = opt.format == "iso" ? cdtm::StampFormat::iso8601 : cdtm::StampFormat::epoch_seconds;
  load.lowercase = opt.lowercase;
  return load;
}

cdtm::Granularity granularity_of(const std::string& name) {
  const auto g = cdtm::granularity_from_string(name);
  if (!g) throw cdtm::DataError("unknown granularity: " + name);
  return *g;
}

/// Per-unit diffusion variance from the whole-period variance.
double per_unit_v(double v_total, const cdtm::TimeGrid& grid) {
  if (grid.ticks() == 0) return v_total;
  const double span = grid.elapsed_from_origin(grid.stamps.back());
  return v_total / std::max(span, 1.0);
}

cdtm::ModelConfig model_config(const CommonOptions& opt, const cdtm::TimeGrid& grid) {
  cdtm::ModelConfig cfg;
  cfg.topics = opt.topics;
  cfg.v = per_unit_v(opt.v_total, grid);
  cfg.v0 = opt.v0;
  cfg.prior_mean = opt.prior_mean;
  cfg.alpha = opt.alpha;
  cfg.vhat = opt.vhat;
  cfg.granularity = granularity_of(opt.granularity);
  cfg.outer_tol = opt.outer_tol;
  cfg.max_outer_iterations = opt.max_outer;
  cfg.cg_iterations = opt.cg_iters;
  cfg.jitter_std = opt.jitter_std;
  cfg.seed = opt.seed;
  cfg.deterministic = opt.deterministic;
  cfg.validate();
  return cfg;
}

std::int64_t parse_stamp_arg(const std::string& text, const CommonOptions& opt,
                             const char* flag_name) {
  std::int64_t stamp = 0;
  if (opt.format == "iso") {
    if (!cdtm::parse_iso8601(text, stamp)) {
      throw cdtm::DataError(std::string(flag_name) + ": bad ISO-8601 stamp '" + text + "'");
    }
  } else {
    try {
      stamp = std::stoll(text);
    } catch (const std::exception&) {
      throw cdtm::DataError(std::string(flag_name) + ": bad epoch stamp '" + text + "'");
    }
  }
  return stamp;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw cdtm::DataError("cannot open output file: " + path);
  out << content;
  if (!out) throw cdtm::DataError("failed writing output file: " + path);
}

json memory_json(const cdtm::MemoryReport& mem) {
  return json{{"vocab_size", mem.vocab_size},
              {"ticks", mem.ticks},
              {"observed_cells", mem.observed_cells},
              {"sparsity", mem.sparsity},
              {"dense_sparse_ratio", mem.dense_sparse_ratio},
              {"avg_presence", mem.avg_presence}};
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  CommonOptions common;
  std::string model_out;
  std::string report_out;
  bool oracle = false;
};

int cmd_fit(const FitArgs& args) {
  const auto docs = cdtm::load_corpus(args.common.corpus_path, load_options(args.common));
  const auto corpus = cdtm::bucket(docs, granularity_of(args.common.granularity));
  const auto cfg = model_config(args.common, corpus.grid);

  const auto model = cdtm::fit(corpus, cfg, {args.common.threads});
  cdtm::save_model(model, args.model_out);

  json report;
  report["schema"] = "cdtm.fit-report/1";
  if (!model.diagnostics.failure.empty()) report["failure"] = model.diagnostics.failure;
  report["topics"] = cfg.topics;
  report["granularity"] = std::string(cdtm::to_string(cfg.granularity));
  report["v_per_unit"] = cfg.v;
  report["objective_trace"] = model.diagnostics.objective_trace;
  report["outer_iterations"] = model.diagnostics.outer_iterations;
  report["variance_clamps"] = model.diagnostics.variance_clamps;
  report["symmetric_start"] = model.diagnostics.symmetric_start;
  report["line_search_warning"] = model.diagnostics.line_search_warning;
  report["memory"] = memory_json(cdtm::memory_report(corpus));
  report["stored_parameters"] = static_cast<std::int64_t>(cfg.topics) * model.pattern.slots();
  report["dropped_constants"] =
      "objective omits beta_hat-independent terms (Gaussian log-normalizers, smoothed-variance "
      "quadratics, entropies); compare objectives by differences";
  report["wall_seconds"] = args.common.deterministic ? 0.0 : model.diagnostics.wall_seconds;

  if (args.oracle) {
    // Cross-check on corpus counts split evenly over topics; this validates
    // the recursion paths, independent of the fitted phi.
    const auto base = cdtm::ExpectedCounts::from_pattern(model.pattern);
    cdtm::ExpectedCounts counts;
    counts.topics = cfg.topics;
    counts.slot_values.resize(static_cast<std::size_t>(cfg.topics) * model.pattern.slots());
    counts.tick_totals.resize(static_cast<std::size_t>(cfg.topics) * model.pattern.tick_count);
    for (int k = 0; k < cfg.topics; ++k) {
      for (std::int64_t s = 0; s < model.pattern.slots(); ++s) {
        counts.slot_values[k * model.pattern.slots() + s] = base.slot_values[s] / cfg.topics;
      }
      for (int t = 0; t < model.pattern.tick_count; ++t) {
        counts.tick_totals[k * model.pattern.tick_count + t] = base.tick_totals[t] / cfg.topics;
      }
    }
    const cdtm::BoundEvaluator eval(model.pattern, model.grid, model.cfg);
    const auto sparse = eval.objective(model.params, counts);
    const auto dense =
        cdtm::dense_objective(model.pattern, model.params, counts, model.grid, model.cfg);
    const auto dense_m = cdtm::dense_moments(model.pattern, model.params, model.grid, model.cfg);
    double max_moment_diff = 0.0;
    for (int k = 0; k < cfg.topics; ++k) {
      for (std::int32_t w = 0; w < model.pattern.vocab_size; ++w) {
        cdtm::MomentWalker walker(model.chain(k, w), model.grid, model.cfg);
        for (int t = 0; t < model.pattern.tick_count; ++t) {
          const auto [sm, sv] = walker.at(t);
          const double dm = dense_m.smooth_mean[dense_m.index(k, w, t)];
          const double dv = dense_m.smooth_var[dense_m.index(k, w, t)];
          max_moment_diff = std::max(
              max_moment_diff, std::abs(sm - dm) / std::max({1.0, std::abs(sm), std::abs(dm)}));
          max_moment_diff = std::max(
              max_moment_diff, std::abs(sv - dv) / std::max({1.0, std::abs(sv), std::abs(dv)}));
        }
      }
    }
    report["oracle"] = {
        {"objective_sparse", sparse.total},
        {"objective_dense", dense.total},
        {"objective_rel_diff",
         std::abs(sparse.total - dense.total) /
             std::max({1.0, std::abs(sparse.total), std::abs(dense.total)})},
        {"max_moment_rel_diff", max_moment_diff},
        {"dense_entries", cdtm::dense_entries(model.pattern, cfg.topics)},
    };
  }

  if (!args.report_out.empty()) {
    write_file(args.report_out, report.dump(2) + "\n");
  } else {
    std::cout << report.dump(2) << "\n";
  }
  if (!model.diagnostics.failure.empty()) {
    std::cerr << "numerical error: " << model.diagnostics.failure
              << " (model rolled back to the last finite state)\n";
    return kExitNumerical;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// perplexity

struct PerplexityArgs {
  CommonOptions common;
  std::string eval_begin;
  std::string eval_end;
  std::string refit = "per-tick";
  std::string model_in;
  std::string report_out;
  std::string summary_out;
  std::string plot_out;
};

int cmd_perplexity(const PerplexityArgs& args) {
  const auto docs = cdtm::load_corpus(args.common.corpus_path, load_options(args.common));
  const auto corpus = cdtm::bucket(docs, granularity_of(args.common.granularity));
  const auto cfg = model_config(args.common, corpus.grid);

  const auto g = granularity_of(args.common.granularity);
  const std::int64_t begin_stamp =
      cdtm::bucket_start(parse_stamp_arg(args.eval_begin, args.common, "--eval-begin"), g);
  const std::int64_t end_stamp =
      cdtm::bucket_start(parse_stamp_arg(args.eval_end, args.common, "--eval-end"), g);

  const auto& stamps = corpus.grid.stamps;
  const auto begin_it = std::lower_bound(stamps.begin(), stamps.end(), begin_stamp);
  const auto end_it = std::upper_bound(stamps.begin(), stamps.end(), end_stamp);
  if (begin_it == stamps.end() || begin_it >= end_it) {
    throw cdtm::DataError("eval range [" + args.eval_begin + ", " + args.eval_end +
                          "] selects no ticks of the grid");
  }
  const int begin_tick = static_cast<int>(begin_it - stamps.begin());
  const int end_tick = static_cast<int>(end_it - stamps.begin()) - 1;

  const cdtm::RefitMode mode =
      args.refit == "per-tick" ? cdtm::RefitMode::per_tick : cdtm::RefitMode::once;

  cdtm::FittedModel preloaded;
  const cdtm::FittedModel* prefit = nullptr;
  if (!args.model_in.empty()) {
    if (mode != cdtm::RefitMode::once) {
      throw cdtm::DataError("--model requires --refit once");
    }
    preloaded = cdtm::load_model(args.model_in);
    prefit = &preloaded;
  }

  const auto report = cdtm::predictive_perplexity(corpus, cfg, begin_tick, end_tick, mode, prefit,
                                                  args.common.threads);

  std::ostringstream lines;
  for (const auto& entry : report.per_tick) {
    json line;
    line["schema"] = "cdtm.perplexity-tick/1";
    line["tick"] = entry.tick;
    line["stamp"] = cdtm::format_iso8601(entry.stamp);
    line["docs"] = entry.doc_count;
    line["tokens"] = entry.token_count;
    line["perplexity"] = entry.perplexity;
    lines << line.dump() << "\n";
  }
  json aggregate;
  aggregate["schema"] = "cdtm.perplexity-aggregate/1";
  aggregate["averaged_perplexity"] = report.averaged;
  aggregate["total_docs"] = report.total_docs;
  aggregate["total_tokens"] = report.total_tokens;
  aggregate["skipped_ticks"] = report.skipped_ticks;
  aggregate["refit"] = args.refit;
  lines << aggregate.dump() << "\n";

  if (!args.report_out.empty()) {
    write_file(args.report_out, lines.str());
  } else {
    std::cout << lines.str();
  }

  if (!args.summary_out.empty()) {
    std::ostringstream summary;
    summary << "tick  stamp                 docs  perplexity\n";
    for (const auto& entry : report.per_tick) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%-5d %-21s %-5d %.6f\n", entry.tick,
                    cdtm::format_iso8601(entry.stamp).c_str(), entry.doc_count, entry.perplexity);
      summary << buf;
    }
    summary << "averaged per-word perplexity: " << report.averaged << "\n";
    write_file(args.summary_out, summary.str());
  }

  if (!args.plot_out.empty()) {
    std::ostringstream plot;
    for (const auto& entry : report.per_tick) {
      plot << entry.tick << "\t" << entry.perplexity << "\n";
    }
    write_file(args.plot_out, plot.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// predict-time

struct PredictTimeArgs {
  CommonOptions common;
  double test_fraction = 0.2;
  std::vector<std::string> levels;
  std::string report_out;
};

int cmd_predict_time(const PredictTimeArgs& args) {
  const auto docs = cdtm::load_corpus(args.common.corpus_path, load_options(args.common));

  std::vector<std::string> level_names = args.levels;
  if (level_names.empty()) level_names.push_back(args.common.granularity);
  std::vector<cdtm::Granularity> levels;
  for (const auto& name : level_names) levels.push_back(granularity_of(name));

  // One split shared by all levels; the finest level builds the vocabulary.
  const auto split =
      cdtm::train_test_split(docs, 1.0 - args.test_fraction, levels.back(), args.common.seed);

  // Raw view of the train documents for the coarser levels.
  std::vector<cdtm::RawDocument> train_raw;
  train_raw.reserve(split.train.docs.size());
  for (const auto& d : split.train.docs) {
    cdtm::RawDocument rd;
    rd.stamp = d.stamp;
    for (const auto w : d.words) rd.tokens.push_back(split.train.vocab->word(w));
    train_raw.push_back(std::move(rd));
  }

  std::vector<cdtm::FittedModel> models;
  models.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    cdtm::BucketedCorpus level_corpus =
        i + 1 == levels.size() ? split.train
                               : cdtm::bucket(train_raw, levels[i], split.train.vocab);
    CommonOptions level_opt = args.common;
    level_opt.granularity = level_names[i];
    models.push_back(
        cdtm::fit(level_corpus, model_config(level_opt, level_corpus.grid), {args.common.threads}));
  }

  std::vector<const cdtm::FittedModel*> pointers;
  for (const auto& m : models) pointers.push_back(&m);
  const auto report = cdtm::time_prediction_report(pointers, split.test);

  std::ostringstream lines;
  for (const auto& entry : report.entries) {
    json line;
    line["schema"] = "cdtm.time-prediction/1";
    line["doc"] = entry.doc_index;
    line["true_tick"] = entry.true_tick;
    line["predicted_tick"] = entry.predicted_tick;
    line["abs_error"] = entry.abs_error;
    line["fallback"] = entry.fallback;
    lines << line.dump() << "\n";
  }
  json aggregate;
  aggregate["schema"] = "cdtm.time-prediction-aggregate/1";
  aggregate["levels"] = level_names;
  aggregate["mean_abs_error"] = report.mean_abs_error;
  aggregate["random_baseline"] = report.random_baseline;
  aggregate["finest_ticks"] = report.finest_ticks;
  aggregate["documents"] = report.entries.size();
  aggregate["skipped_all_oov"] = report.skipped_all_oov;
  lines << aggregate.dump() << "\n";

  if (!args.report_out.empty()) {
    write_file(args.report_out, lines.str());
  } else {
    std::cout << lines.str();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// export-topics

struct ExportArgs {
  std::string model_in;
  std::string every;
  std::string at;
  int top = 10;
  std::string out;
};

std::int64_t add_duration(std::int64_t stamp, long count, const std::string& unit) {
  if (unit == "second" || unit == "seconds" || unit == "s") return stamp + count;
  if (unit == "hour" || unit == "hours" || unit == "h") return stamp + count * 3600;
  if (unit == "day" || unit == "days" || unit == "d") return stamp + count * 86400;
  if (unit == "week" || unit == "weeks" || unit == "w") return stamp + count * 7 * 86400;
  if (unit == "month" || unit == "months" || unit == "m") {
    using namespace std::chrono;
    const sys_seconds tp{seconds{stamp}};
    const auto dp = floor<days>(tp);
    const year_month_day ymd{dp};
    const year_month target = ymd.year() / ymd.month() + months{count};
    auto day_in_month = ymd.day();
    const year_month_day_last last{target / std::chrono::last};
    if (day_in_month > last.day()) day_in_month = last.day();
    const sys_days shifted{target / day_in_month};
    return shifted.time_since_epoch().count() * std::int64_t{86400} + (tp - dp).count();
  }
  throw cdtm::DataError("unknown duration unit: " + unit);
}

std::pair<long, std::string> parse_duration(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == 0 || i == text.size()) {
    throw cdtm::DataError("bad duration '" + text + "'; expected e.g. 2months, 10days, 36hours");
  }
  return {std::stol(text.substr(0, i)), text.substr(i)};
}

int cmd_export_topics(const ExportArgs& args) {
  const auto model = cdtm::load_model(args.model_in);
  if (model.grid.ticks() == 0) throw cdtm::DataError("model has an empty time grid");

  std::vector<std::int64_t> sample_stamps;
  if (!args.at.empty()) {
    std::int64_t stamp = 0;
    if (!cdtm::parse_iso8601(args.at, stamp)) {
      try {
        stamp = std::stoll(args.at);
      } catch (const std::exception&) {
        throw cdtm::DataError("--at: bad stamp '" + args.at + "'");
      }
    }
    if (stamp < model.grid.stamps.front() || stamp > model.grid.stamps.back()) {
      throw cdtm::DataError("--at stamp " + args.at + " outside the model range [" +
                            cdtm::format_iso8601(model.grid.stamps.front()) + ", " +
                            cdtm::format_iso8601(model.grid.stamps.back()) + "]");
    }
    sample_stamps.push_back(stamp);
  } else {
    const auto [count, unit] = parse_duration(args.every.empty() ? "1days" : args.every);
    for (std::int64_t stamp = model.grid.stamps.front(); stamp <= model.grid.stamps.back();
         stamp = add_duration(stamp, count, unit)) {
      sample_stamps.push_back(stamp);
      if (sample_stamps.size() > 100000) {
        throw cdtm::DataError("--every step produces too many samples");
      }
    }
  }

  std::ostringstream out;
  out << "stamp\ttopic\trank\tword\tprobability\n";
  for (const std::int64_t stamp : sample_stamps) {
    const auto topics = cdtm::posterior_topics_at_stamp(model, stamp);
    for (int k = 0; k < topics.topics; ++k) {
      std::vector<std::int32_t> order(topics.vocab_size);
      std::iota(order.begin(), order.end(), 0);
      const double* row = topics.probs.data() + static_cast<std::size_t>(k) * topics.vocab_size;
      const int top = std::min<int>(args.top, topics.vocab_size);
      std::partial_sort(order.begin(), order.begin() + top, order.end(),
                        [&](std::int32_t a, std::int32_t b) {
                          return row[a] != row[b] ? row[a] > row[b] : a < b;
                        });
      for (int rank = 0; rank < top; ++rank) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s\t%d\t%d\t%s\t%.10g\n",
                      cdtm::format_iso8601(stamp).c_str(), k, rank + 1,
                      model.vocab->word(order[rank]).c_str(), row[order[rank]]);
        out << buf;
      }
    }
  }

  if (!args.out.empty()) {
    write_file(args.out, out.str());
  } else {
    std::cout << out.str();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  CommonOptions common;
  std::string out;
  std::string truth_out;
  std::int32_t vocab_size = 25;
  int ticks = 30;
  int docs_per_tick = 5;
  int doc_length = 50;
  std::int64_t gap_seconds = 1;
  std::int64_t first_stamp = 0;
};

int cmd_generate(const GenerateArgs& args) {
  cdtm::SyntheticSpec spec;
  spec.vocab_size = args.vocab_size;
  spec.ticks = args.ticks;
  spec.docs_per_tick = args.docs_per_tick;
  spec.doc_length = args.doc_length;
  spec.gap_seconds = args.gap_seconds;
  spec.first_stamp = args.first_stamp;

  // The sampling grid, for converting --v-total into a per-unit variance.
  cdtm::TimeGrid grid;
  grid.granularity = cdtm::Granularity::raw;
  grid.origin = args.first_stamp - 1;
  grid.stamps = {args.first_stamp +
                 static_cast<std::int64_t>(args.ticks - 1) * args.gap_seconds};

  cdtm::ModelConfig cfg;
  cfg.topics = args.common.topics;
  cfg.v = per_unit_v(args.common.v_total, grid);
  cfg.v0 = args.common.v0;
  cfg.prior_mean = args.common.prior_mean;
  cfg.alpha = args.common.alpha;
  cfg.vhat = args.common.vhat;
  cfg.granularity = cdtm::Granularity::raw;
  cfg.seed = args.common.seed;

  const auto data = cdtm::generate_synthetic(cfg, spec, args.common.seed);

  std::ostringstream corpus;
  for (const auto& doc : data.docs) {
    corpus << doc.stamp << "\t";
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i) corpus << ' ';
      corpus << doc.tokens[i];
    }
    corpus << "\n";
  }
  write_file(args.out, corpus.str());

  if (!args.truth_out.empty()) {
    json truth;
    truth["schema"] = "cdtm.synthetic-truth/1";
    truth["topics"] = cfg.topics;
    truth["vocab_size"] = data.vocab_size;
    truth["ticks"] = data.grid.ticks();
    truth["stamps"] = data.grid.stamps;
    truth["v_per_unit"] = cfg.v;
    truth["beta"] = data.beta;    // topics x ticks x V, tick-major within topic
    truth["theta"] = data.theta;  // docs x topics
    write_file(args.truth_out, truth.dump() + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time dynamic topic models: sparse variational Kalman inference "
               "over Brownian-motion topic trajectories"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write it to disk");
  add_corpus_flags(fit_cmd, fit_args.common);
  add_model_flags(fit_cmd, fit_args.common);
  fit_cmd->add_option("--out", fit_args.model_out, "Model file to write")->required();
  fit_cmd->add_option("--report", fit_args.report_out, "Fit report (JSON); stdout when omitted");
  fit_cmd->add_flag("--oracle", fit_args.oracle,
                    "Cross-check the sparse path against the dense reference after fitting");

  PerplexityArgs perp_args;
  auto* perp_cmd =
      app.add_subcommand("perplexity", "Per-word predictive perplexity over an eval range");
  add_corpus_flags(perp_cmd, perp_args.common);
  add_model_flags(perp_cmd, perp_args.common);
  perp_cmd->add_option("--eval-begin", perp_args.eval_begin, "First predicted stamp (inclusive)")
      ->required();
  perp_cmd->add_option("--eval-end", perp_args.eval_end, "Last predicted stamp (inclusive)")
      ->required();
  perp_cmd->add_option("--refit", perp_args.refit,
                       "per-tick: refit on every prefix; once: one fit before the range")
      ->check(CLI::IsMember({"per-tick", "once"}))
      ->capture_default_str();
  perp_cmd->add_option("--model", perp_args.model_in,
                       "Score with this model instead of fitting (requires --refit once)");
  perp_cmd->add_option("--out", perp_args.report_out,
                       "Report file (one JSON object per line); stdout when omitted");
  perp_cmd->add_option("--summary", perp_args.summary_out, "Plain-text summary table");
  perp_cmd->add_option("--plot-data", perp_args.plot_out,
                       "Tab-separated (tick, perplexity) pairs");

  PredictTimeArgs time_args;
  auto* time_cmd = app.add_subcommand("predict-time", "Date held-out documents over the grid");
  add_corpus_flags(time_cmd, time_args.common);
  add_model_flags(time_cmd, time_args.common);
  time_cmd->add_option("--test-fraction", time_args.test_fraction, "Held-out document fraction")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9))
      ->capture_default_str();
  time_cmd->add_option("--levels", time_args.levels,
                       "Coarse-to-fine granularities for hierarchical search, e.g. month,week,day")
      ->delimiter(',');
  time_cmd->add_option("--out", time_args.report_out,
                       "Report file (one JSON object per line); stdout when omitted");

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export-topics", "Top words per topic at sampled stamps");
  export_cmd->add_option("--model", export_args.model_in, "Model file")->required();
  export_cmd->add_option("--every", export_args.every,
                         "Sampling step across the grid, e.g. 2months, 3weeks, 36hours");
  export_cmd->add_option("--at", export_args.at,
                         "Export at one stamp (must lie in the grid range)");
  export_cmd->add_option("--top", export_args.top, "Words per topic")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  export_cmd->add_option("--out", export_args.out, "Output table (TSV); stdout when omitted");

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "Sample a synthetic corpus from the model");
  add_model_flags(gen_cmd, gen_args.common);
  gen_cmd->add_option("--out", gen_args.out, "Corpus file to write (epoch-seconds format)")
      ->required();
  gen_cmd->add_option("--truth", gen_args.truth_out, "Ground-truth trajectories (JSON)");
  gen_cmd->add_option("--vocab-size", gen_args.vocab_size, "Vocabulary size")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  gen_cmd->add_option("--ticks", gen_args.ticks, "Number of ticks")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  gen_cmd->add_option("--docs-per-tick", gen_args.docs_per_tick, "Documents per tick")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  gen_cmd->add_option("--doc-length", gen_args.doc_length, "Tokens per document")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  gen_cmd->add_option("--gap-seconds", gen_args.gap_seconds, "Gap between ticks")
      ->check(CLI::Range(std::int64_t{1}, std::int64_t{1} << 40))
      ->capture_default_str();
  gen_cmd->add_option("--first-stamp", gen_args.first_stamp, "Stamp of the first tick")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_args);
    if (*perp_cmd) return cmd_perplexity(perp_args);
    if (*time_cmd) return cmd_predict_time(time_args);
    if (*export_cmd) return cmd_export_topics(export_args);
    if (*gen_cmd) return cmd_generate(gen_args);
  } catch (const cdtm::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const cdtm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const cdtm::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
