#include "cdtm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "cdtm/errors.hpp"

namespace cdtm {

std::int32_t Vocabulary::add(const std::string& word) {
  auto [it, inserted] = ids_.try_emplace(word, static_cast<std::int32_t>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

std::optional<std::int32_t> Vocabulary::lookup(const std::string& word) const {
  const auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::int64_t BucketedCorpus::observed_cells() const {
  std::int64_t cells = 0;
  for (const auto& tick : counts_at) cells += static_cast<std::int64_t>(tick.size());
  return cells;
}

namespace {

bool parse_stamp(std::string_view field, StampFormat format, std::int64_t& out) {
  if (format == StampFormat::iso8601) return parse_iso8601(field, out);
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

std::vector<RawDocument> load_corpus(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);

  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": missing tab separator");
    }
    RawDocument doc;
    if (!parse_stamp(std::string_view(line).substr(0, tab), options.format, doc.stamp)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad time stamp '" +
                       line.substr(0, tab) + "'");
    }
    std::istringstream tokens(line.substr(tab + 1));
    std::string token;
    while (tokens >> token) {
      if (options.lowercase) {
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return std::tolower(c); });
      }
      doc.tokens.push_back(std::move(token));
      token.clear();
    }
    if (doc.tokens.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": document has no tokens");
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw DataError("corpus file is empty: " + path);
  return docs;
}

namespace {

BucketedCorpus bucket_impl(std::span<const RawDocument> docs, Granularity granularity,
                           std::shared_ptr<const Vocabulary> fixed_vocab) {
  if (docs.empty()) throw DataError("cannot bucket an empty document set");

  BucketedCorpus corpus;
  corpus.grid.granularity = granularity;

  std::vector<std::int64_t> buckets;
  buckets.reserve(docs.size());
  for (const auto& doc : docs) buckets.push_back(bucket_start(doc.stamp, granularity));
  std::vector<std::int64_t> sorted = buckets;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  corpus.grid.stamps = std::move(sorted);
  corpus.grid.origin = previous_bucket(corpus.grid.stamps.front(), granularity);

  std::shared_ptr<const Vocabulary> vocab;
  Vocabulary* mutable_vocab = nullptr;
  if (fixed_vocab) {
    vocab = std::move(fixed_vocab);
  } else {
    auto fresh = std::make_shared<Vocabulary>();
    mutable_vocab = fresh.get();
    vocab = fresh;
  }

  const int T = corpus.grid.ticks();
  corpus.docs_at.resize(T);
  corpus.counts_at.resize(T);
  corpus.tick_totals.assign(T, 0);

  std::vector<std::map<std::int32_t, std::int64_t>> counts(T);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    Document mapped;
    mapped.stamp = docs[d].stamp;
    mapped.tick = corpus.grid.find_tick(buckets[d]);
    for (const auto& token : docs[d].tokens) {
      std::int32_t id;
      if (mutable_vocab) {
        id = mutable_vocab->add(token);
      } else if (auto found = vocab->lookup(token)) {
        id = *found;
      } else {
        ++corpus.oov_dropped;
        continue;
      }
      mapped.words.push_back(id);
      ++counts[mapped.tick][id];
      ++corpus.tick_totals[mapped.tick];
      ++corpus.total_tokens;
    }
    corpus.docs_at[mapped.tick].push_back(static_cast<std::int32_t>(corpus.docs.size()));
    corpus.docs.push_back(std::move(mapped));
  }
  for (int t = 0; t < T; ++t) {
    corpus.counts_at[t].assign(counts[t].begin(), counts[t].end());
  }
  corpus.vocab = std::move(vocab);
  return corpus;
}

}  // namespace

BucketedCorpus bucket(std::span<const RawDocument> docs, Granularity granularity) {
  return bucket_impl(docs, granularity, nullptr);
}

BucketedCorpus bucket(std::span<const RawDocument> docs, Granularity granularity,
                      std::shared_ptr<const Vocabulary> vocab) {
  return bucket_impl(docs, granularity, std::move(vocab));
}

double sparsity(const BucketedCorpus& corpus) {
  const std::int64_t T = corpus.grid.ticks();
  const std::int64_t V = corpus.vocab ? corpus.vocab->size() : 0;
  if (T < 1 || V < 1) throw DataError("sparsity requires at least one tick and one word");
  return 1.0 - static_cast<double>(corpus.observed_cells()) / (static_cast<double>(V) * T);
}

TrainTestSplit train_test_split(std::span<const RawDocument> docs, double train_fraction,
                                Granularity granularity, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  }
  const std::size_t n = docs.size();
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train && i < n; ++i) in_train[order[i]] = true;

  std::vector<RawDocument> train_docs;
  TrainTestSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_train[i]) {
      train_docs.push_back(docs[i]);
    } else {
      split.test.push_back(docs[i]);
    }
  }
  if (train_docs.empty()) throw DataError("train split is empty; use a larger fraction");
  split.train = bucket(train_docs, granularity);
  return split;
}

BucketedCorpus prefix(const BucketedCorpus& corpus, int tick_count) {
  if (tick_count < 0 || tick_count > corpus.grid.ticks()) {
    throw DataError("prefix tick count " + std::to_string(tick_count) + " outside [0, " +
                    std::to_string(corpus.grid.ticks()) + "]");
  }
  BucketedCorpus out;
  out.grid.granularity = corpus.grid.granularity;
  out.grid.origin = corpus.grid.origin;
  out.grid.stamps.assign(corpus.grid.stamps.begin(), corpus.grid.stamps.begin() + tick_count);
  out.vocab = corpus.vocab;
  out.docs_at.resize(tick_count);
  out.counts_at.assign(corpus.counts_at.begin(), corpus.counts_at.begin() + tick_count);
  out.tick_totals.assign(corpus.tick_totals.begin(), corpus.tick_totals.begin() + tick_count);
  for (int t = 0; t < tick_count; ++t) {
    for (const std::int32_t d : corpus.docs_at[t]) {
      out.docs_at[t].push_back(static_cast<std::int32_t>(out.docs.size()));
      out.docs.push_back(corpus.docs[d]);
    }
    out.total_tokens += out.tick_totals[t];
  }
  out.oov_dropped = 0;
  return out;
}

}  // namespace cdtm
