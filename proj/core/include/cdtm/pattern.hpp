#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdtm/corpus.hpp"

namespace cdtm {

/// The sparsity skeleton of a corpus: which (tick, word) cells carry a
/// pseudo-observation. Everything stored during fitting (parameters,
/// gradients, chain moments) is laid out on these slots, never on the dense
/// V x T grid.
///
/// Slots are word-major: slots of word w sit at [word_offsets[w],
/// word_offsets[w+1]) with strictly increasing tick indices. A tick-major
/// permutation over the same slots serves per-tick sweeps.
struct SparsityPattern {
  std::int32_t vocab_size = 0;
  std::int32_t tick_count = 0;

  std::vector<std::int64_t> word_offsets;  // V + 1
  std::vector<std::int32_t> slot_tick;     // per slot
  std::vector<std::int64_t> slot_count;    // n_{t,w} per slot

  std::vector<std::int64_t> tick_offsets;  // T + 1
  std::vector<std::int64_t> tick_slot;     // slots regrouped by tick
  std::vector<std::int32_t> tick_word;     // word of tick_slot[i]

  std::int64_t slots() const { return static_cast<std::int64_t>(slot_tick.size()); }

  std::span<const std::int32_t> word_ticks(std::int32_t w) const {
    return {slot_tick.data() + word_offsets[w],
            static_cast<std::size_t>(word_offsets[w + 1] - word_offsets[w])};
  }

  /// Flat slot index of (word, tick), or -1 when delta_{t,w} == 0.
  std::int64_t find_slot(std::int32_t word, std::int32_t tick) const;

  static SparsityPattern from_corpus(const BucketedCorpus& corpus);

  /// Rebuilds the tick-major view from deserialized word-major data.
  static SparsityPattern from_parts(std::int32_t vocab_size, std::int32_t tick_count,
                                    std::vector<std::int64_t> word_offsets,
                                    std::vector<std::int32_t> slot_tick,
                                    std::vector<std::int64_t> slot_count);
};

}  // namespace cdtm
