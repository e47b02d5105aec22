// Sparse vs dense inference cost at varying data sparsity. The sparse path
// should win by roughly the dense:sparse parameter ratio on the chain pass,
// while objective/gradient sweeps stay O(V*T) either way.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cdtm/bound.hpp"
#include "cdtm/dense_oracle.hpp"
#include "cdtm/eval.hpp"
#include "cdtm/inference.hpp"

namespace {

using namespace cdtm;

struct Instance {
  SparsityPattern pattern;
  TimeGrid grid;
  ModelConfig cfg;
  ExpectedCounts counts;
  std::vector<double> params;
};

Instance make_instance(std::int32_t vocab, int ticks, double present_prob, int topics) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  Instance inst;
  inst.grid.granularity = Granularity::raw;
  inst.grid.origin = 0;
  for (int t = 1; t <= ticks; ++t) inst.grid.stamps.push_back(t);

  std::vector<std::int64_t> offsets(vocab + 1, 0);
  std::vector<std::int32_t> slot_tick;
  std::vector<std::int64_t> slot_count;
  for (std::int32_t w = 0; w < vocab; ++w) {
    for (int t = 0; t < ticks; ++t) {
      if (unit(rng) < present_prob) {
        slot_tick.push_back(t);
        slot_count.push_back(1 + static_cast<std::int64_t>(rng() % 4));
      }
    }
    offsets[w + 1] = static_cast<std::int64_t>(slot_tick.size());
  }
  inst.pattern = SparsityPattern::from_parts(vocab, ticks, std::move(offsets),
                                             std::move(slot_tick), std::move(slot_count));

  inst.cfg.topics = topics;
  inst.cfg.v = 0.1;
  inst.cfg.v0 = 1.0;
  inst.cfg.vhat = 0.8;

  const std::int64_t S = inst.pattern.slots();
  inst.counts.topics = topics;
  inst.counts.slot_values.assign(static_cast<std::size_t>(topics) * S, 0.0);
  inst.counts.tick_totals.assign(static_cast<std::size_t>(topics) * ticks, 0.0);
  for (std::int64_t s = 0; s < S; ++s) {
    for (int k = 0; k < topics; ++k) {
      const double value = static_cast<double>(inst.pattern.slot_count[s]) / topics;
      inst.counts.slot_values[static_cast<std::size_t>(k) * S + s] = value;
      inst.counts.tick_totals[static_cast<std::size_t>(k) * ticks + inst.pattern.slot_tick[s]] +=
          value;
    }
  }
  inst.params.resize(static_cast<std::size_t>(topics) * S);
  for (auto& p : inst.params) p = noise(rng);
  return inst;
}

void BM_sparse_chain_pass(benchmark::State& state) {
  const auto inst = make_instance(2000, static_cast<int>(state.range(0)),
                                  state.range(1) / 100.0, 1);
  const BoundEvaluator eval(inst.pattern, inst.grid, inst.cfg);
  TopicPosterior post;
  for (auto _ : state) {
    eval.update_posterior(inst.params, post);
    benchmark::DoNotOptimize(post.smooth_mean.data());
  }
  state.counters["slots"] = static_cast<double>(inst.pattern.slots());
}
BENCHMARK(BM_sparse_chain_pass)
    ->Args({200, 5})
    ->Args({200, 30})
    ->Args({200, 95})
    ->Unit(benchmark::kMillisecond);

void BM_dense_chain_pass(benchmark::State& state) {
  const auto inst = make_instance(2000, static_cast<int>(state.range(0)),
                                  state.range(1) / 100.0, 1);
  for (auto _ : state) {
    const auto moments =
        dense_moments(inst.pattern, inst.params, inst.grid, inst.cfg, 1LL << 40);
    benchmark::DoNotOptimize(moments.smooth_mean.data());
  }
  state.counters["entries"] = static_cast<double>(dense_entries(inst.pattern, 1));
}
BENCHMARK(BM_dense_chain_pass)
    ->Args({200, 5})
    ->Args({200, 30})
    ->Args({200, 95})
    ->Unit(benchmark::kMillisecond);

void BM_objective(benchmark::State& state) {
  const auto inst = make_instance(1000, 100, state.range(0) / 100.0, 2);
  const BoundEvaluator eval(inst.pattern, inst.grid, inst.cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.objective(inst.params, inst.counts).total);
  }
}
BENCHMARK(BM_objective)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_gradient(benchmark::State& state) {
  const auto inst = make_instance(1000, 100, state.range(0) / 100.0, 2);
  const BoundEvaluator eval(inst.pattern, inst.grid, inst.cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.gradient(inst.params, inst.counts).values.data());
  }
}
BENCHMARK(BM_gradient)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_fit_synthetic(benchmark::State& state) {
  ModelConfig cfg;
  cfg.topics = 2;
  cfg.v = 0.02;
  cfg.v0 = 1.0;
  cfg.vhat = 0.5;
  cfg.alpha = 0.3;
  cfg.granularity = Granularity::raw;
  cfg.max_outer_iterations = static_cast<int>(state.range(0));
  SyntheticSpec spec;
  spec.vocab_size = 50;
  spec.ticks = 40;
  spec.docs_per_tick = 4;
  spec.doc_length = 30;
  const auto data = generate_synthetic(cfg, spec, 99);
  const auto corpus = bucket(data.docs, Granularity::raw);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(corpus, cfg).params.data());
  }
}
BENCHMARK(BM_fit_synthetic)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
