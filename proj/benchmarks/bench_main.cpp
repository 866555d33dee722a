#include <benchmark/benchmark.h>

#include "fprobe/geometry.hpp"
#include "fprobe/perturb.hpp"
#include "fprobe/probes.hpp"
#include "fprobe/rng.hpp"
#include "fprobe/spectral.hpp"
#include "fprobe/synth.hpp"

namespace {

using namespace fprobe;

void BM_DftDirect(benchmark::State& state) {
  const auto table = gaussian_table(static_cast<std::size_t>(state.range(0)), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dft(table, {DftMethod::direct}).power.sum());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DftDirect)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_DftFft(benchmark::State& state) {
  const auto table = gaussian_table(static_cast<std::size_t>(state.range(0)), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dft(table, {DftMethod::fft}).power.sum());
}
BENCHMARK(BM_DftFft)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Scatter(benchmark::State& state) {
  const auto table = gaussian_table(1000, static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(scatter(table, 10).fisher);
}
BENCHMARK(BM_Scatter)->Arg(8)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LinearProbeRun(benchmark::State& state) {
  const auto table = gaussian_table(1000, static_cast<std::size_t>(state.range(0)), 3);
  ProbeConfig cfg;
  cfg.period = 10;
  cfg.n_seeds = 1;
  for (auto _ : state) benchmark::DoNotOptimize(linear_probe(table, cfg).accuracy);
}
BENCHMARK(BM_LinearProbeRun)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

TokenCorpus bench_corpus() {
  TokenCorpus c;
  c.vocab_size = 1100;
  for (std::uint32_t v = 0; v < 1000; ++v) c.number_vocab.emplace(100 + v, v);
  SplitMix64 rng(4);
  c.sequences.resize(2000);
  for (auto& seq : c.sequences) {
    seq.resize(1024);
    for (auto& t : seq) {
      t = static_cast<std::uint32_t>(rng.uniform() < 0.3 ? 100 + rng.below(1000) : rng.below(100));
    }
  }
  return c;
}

void BM_SwapNumbers(benchmark::State& state) {
  const auto corpus = bench_corpus();
  for (auto _ : state) benchmark::DoNotOptimize(swap_numbers(corpus, 1).corpus.sequences.size());
}
BENCHMARK(BM_SwapNumbers)->Unit(benchmark::kMillisecond);

void BM_IsolateK(benchmark::State& state) {
  const auto corpus = bench_corpus();
  for (auto _ : state) benchmark::DoNotOptimize(isolate_k(corpus, 2).plan->sequences.size());
}
BENCHMARK(BM_IsolateK)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
