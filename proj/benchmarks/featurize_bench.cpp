#include <benchmark/benchmark.h>

#include <string>

#include "idil/data.hpp"

namespace {

void BM_Featurize(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < state.range(0); ++i) text += "token" + std::to_string(i % 97) + " ";
  for (auto _ : state) benchmark::DoNotOptimize(idil::data::featurize(text, 1u << 14));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Featurize)->RangeMultiplier(4)->Range(16, 4096);

}  // namespace
