// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>

#include "ntm/corpus.hpp"
#include "ntm/kernels.hpp"
#include "support/oracles.hpp"

namespace {

using namespace ntm;

template <Tensor (*Kernel)(const Tensor&, const Tensor&)>
void matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(1);
  const Tensor a = testing::random_tensor(n, n, gen);
  const Tensor b = testing::random_tensor(n, n, gen);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <Tensor (*Kernel)(const Tensor&)>
void softmax(benchmark::State& state) {
  std::mt19937_64 gen(2);
  const Tensor a = testing::random_tensor(256, static_cast<std::size_t>(state.range(0)), gen, -5, 5);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a));
}

std::vector<EncodedDocument> reference_corpus() {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::int32_t> word(-1, 1999);
  std::uniform_int_distribution<std::size_t> length(20, 400);
  std::vector<EncodedDocument> docs(2000);
  for (auto& d : docs) {
    d.resize(length(gen));
    for (auto& t : d) t = word(gen);
  }
  return docs;
}

template <Execution Mode>
void cooccurrence(benchmark::State& state) {
  static const auto docs = reference_corpus();
  std::vector<std::string> words;
  for (int i = 0; i < 2000; ++i) words.push_back("w" + std::to_string(i));
  const auto vocab = std::make_shared<const Vocabulary>(std::move(words));
  for (auto _ : state) benchmark::DoNotOptimize(count_cooccurrence(docs, vocab, 10, Mode));
}

}  // namespace

BENCHMARK(matmul<kernels::serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(matmul<kernels::parallel::matmul>)->Name("matmul/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(softmax<kernels::serial::softmax_rows>)->Name("softmax_rows/serial")->Arg(2000);
BENCHMARK(softmax<kernels::parallel::softmax_rows>)->Name("softmax_rows/parallel")->Arg(2000);
BENCHMARK(cooccurrence<Execution::serial>)->Name("cooccurrence/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(cooccurrence<Execution::parallel>)->Name("cooccurrence/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
