#include "cdtm/pattern.hpp"

#include <algorithm>

namespace cdtm {

std::int64_t SparsityPattern::find_slot(std::int32_t word, std::int32_t tick) const {
  const auto ticks = word_ticks(word);
  const auto it = std::lower_bound(ticks.begin(), ticks.end(), tick);
  if (it == ticks.end() || *it != tick) return -1;
  return word_offsets[word] + (it - ticks.begin());
}

SparsityPattern SparsityPattern::from_corpus(const BucketedCorpus& corpus) {
  SparsityPattern pattern;
  pattern.vocab_size = corpus.vocab ? corpus.vocab->size() : 0;
  pattern.tick_count = corpus.grid.ticks();

  const std::int32_t V = pattern.vocab_size;
  const std::int32_t T = pattern.tick_count;

  // Per-word slot counts, then prefix sums.
  std::vector<std::int64_t> per_word(V, 0);
  for (std::int32_t t = 0; t < T; ++t) {
    for (const auto& [w, n] : corpus.counts_at[t]) ++per_word[w];
  }
  pattern.word_offsets.assign(V + 1, 0);
  for (std::int32_t w = 0; w < V; ++w) {
    pattern.word_offsets[w + 1] = pattern.word_offsets[w] + per_word[w];
  }

  const std::int64_t S = pattern.word_offsets[V];
  pattern.slot_tick.resize(S);
  pattern.slot_count.resize(S);
  pattern.tick_offsets.assign(T + 1, 0);
  pattern.tick_slot.resize(S);
  pattern.tick_word.resize(S);

  // Walking ticks in order fills each word's slots with ascending ticks.
  std::vector<std::int64_t> cursor(pattern.word_offsets.begin(), pattern.word_offsets.end() - 1);
  std::int64_t flat = 0;
  for (std::int32_t t = 0; t < T; ++t) {
    pattern.tick_offsets[t] = flat;
    for (const auto& [w, n] : corpus.counts_at[t]) {
      const std::int64_t slot = cursor[w]++;
      pattern.slot_tick[slot] = t;
      pattern.slot_count[slot] = n;
      pattern.tick_slot[flat] = slot;
      pattern.tick_word[flat] = w;
      ++flat;
    }
  }
  pattern.tick_offsets[T] = flat;
  return pattern;
}

SparsityPattern SparsityPattern::from_parts(std::int32_t vocab_size, std::int32_t tick_count,
                                            std::vector<std::int64_t> word_offsets,
                                            std::vector<std::int32_t> slot_tick,
                                            std::vector<std::int64_t> slot_count) {
  SparsityPattern pattern;
  pattern.vocab_size = vocab_size;
  pattern.tick_count = tick_count;
  pattern.word_offsets = std::move(word_offsets);
  pattern.slot_tick = std::move(slot_tick);
  pattern.slot_count = std::move(slot_count);

  const std::int64_t S = pattern.slots();
  pattern.tick_offsets.assign(tick_count + 1, 0);
  for (const std::int32_t t : pattern.slot_tick) ++pattern.tick_offsets[t + 1];
  for (std::int32_t t = 0; t < tick_count; ++t) {
    pattern.tick_offsets[t + 1] += pattern.tick_offsets[t];
  }
  pattern.tick_slot.resize(S);
  pattern.tick_word.resize(S);
  std::vector<std::int64_t> cursor(pattern.tick_offsets.begin(), pattern.tick_offsets.end() - 1);
  // Words ascending keeps each tick's slots in word order.
  for (std::int32_t w = 0; w < vocab_size; ++w) {
    for (std::int64_t s = pattern.word_offsets[w]; s < pattern.word_offsets[w + 1]; ++s) {
      const std::int64_t at = cursor[pattern.slot_tick[s]]++;
      pattern.tick_slot[at] = s;
      pattern.tick_word[at] = w;
    }
  }
  return pattern;
}

}  // namespace cdtm
