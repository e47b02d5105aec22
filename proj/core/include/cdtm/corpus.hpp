#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cdtm/time_grid.hpp"

namespace cdtm {

/// One time-stamped document straight from disk.
struct RawDocument {
  std::int64_t stamp = 0;           // epoch seconds
  std::vector<std::string> tokens;  // non-empty
};

enum class StampFormat { iso8601, epoch_seconds };

struct LoadOptions {
  StampFormat format = StampFormat::iso8601;
  bool lowercase = false;
};

/// Bijective word <-> id map with ids dense in [0, size).
class Vocabulary {
 public:
  std::int32_t add(const std::string& word);
  std::optional<std::int32_t> lookup(const std::string& word) const;
  const std::string& word(std::int32_t id) const { return words_.at(id); }
  std::int32_t size() const { return static_cast<std::int32_t>(words_.size()); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

/// A document mapped onto the grid: tick index plus vocabulary ids in token
/// order. Tokens outside a fixed vocabulary are dropped at mapping time.
struct Document {
  std::int32_t tick = 0;
  std::int64_t stamp = 0;  // original stamp, epoch seconds
  std::vector<std::int32_t> words;
};

/// Corpus bucketed at one granularity: grid, documents grouped by tick, and
/// per-tick sparse word counts n_{t,w} with totals n_t.
struct BucketedCorpus {
  TimeGrid grid;
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<Document> docs;
  std::vector<std::vector<std::int32_t>> docs_at;  // tick -> doc indices
  // tick -> (word, count), sorted by word; presence delta_{t,w} == count > 0
  std::vector<std::vector<std::pair<std::int32_t, std::int64_t>>> counts_at;
  std::vector<std::int64_t> tick_totals;  // n_t
  std::int64_t total_tokens = 0;
  std::int64_t oov_dropped = 0;  // tokens outside a fixed vocabulary

  /// Sum_t sum_w delta_{t,w}: number of occupied (tick, word) cells.
  std::int64_t observed_cells() const;
};

/// Reads one document per line: `stamp<TAB>space-separated tokens`.
/// Throws ParseError naming the line on malformed input, DataError on an
/// empty file.
std::vector<RawDocument> load_corpus(const std::string& path, const LoadOptions& options = {});

/// Buckets documents at the given granularity, building the vocabulary from
/// the documents themselves.
BucketedCorpus bucket(std::span<const RawDocument> docs, Granularity granularity);

/// Buckets against a fixed vocabulary; unknown tokens are dropped and
/// counted in `oov_dropped`. Documents whose tokens are all unknown are kept
/// (with empty word lists) so callers can report them.
BucketedCorpus bucket(std::span<const RawDocument> docs, Granularity granularity,
                      std::shared_ptr<const Vocabulary> vocab);

/// 1 - (sum_t sum_w delta_{t,w}) / (V * T). Requires T >= 1 and V >= 1.
double sparsity(const BucketedCorpus& corpus);

struct TrainTestSplit {
  BucketedCorpus train;           // bucketed, vocabulary built from train only
  std::vector<RawDocument> test;  // raw, in file order
};

/// Uniform random document split, deterministic per seed. Both sides keep
/// file order. Throws std::invalid_argument unless 0 < fraction < 1.
TrainTestSplit train_test_split(std::span<const RawDocument> docs, double train_fraction,
                                Granularity granularity, std::uint64_t seed);

/// Corpus restricted to the first `tick_count` ticks; vocabulary unchanged.
/// `tick_count` may be 0 (empty corpus, same grid origin) up to ticks().
BucketedCorpus prefix(const BucketedCorpus& corpus, int tick_count);

}  // namespace cdtm
