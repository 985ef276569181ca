// Serial reference kernel against the event-driven and dense production kernels.
//   ./bench_kernels --benchmark_filter=Events
// Arguments are (rows, cols, active percent).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dsnn/kernels.hpp"
#include "dsnn/matrix.hpp"

using namespace dsnn;

namespace {

struct Fixture {
  Matrix w;
  std::vector<double> input;
  std::vector<std::size_t> active;
  std::vector<double> membrane;
  std::vector<std::uint8_t> spikes;

  explicit Fixture(const benchmark::State &state)
      : w(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1))),
        input(w.cols()), membrane(w.rows()), spikes(w.rows()) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto &v : w.data()) v = n(rng);
    std::bernoulli_distribution on(static_cast<double>(state.range(2)) / 100.0);
    for (std::size_t j = 0; j < input.size(); ++j)
      if (on(rng)) {
        input[j] = 1.0;
        active.push_back(j);
      }
  }
};

void Reference(benchmark::State &state) {
  Fixture f(state);
  for (auto _ : state) {
    kernels::lif_step_reference(f.w, f.input, 0.9, 1.0, f.membrane, f.spikes);
    benchmark::DoNotOptimize(f.membrane.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void Events(benchmark::State &state) {
  Fixture f(state);
  for (auto _ : state) {
    kernels::lif_step_events(f.w, f.active, 0.9, 1.0, f.membrane, f.spikes);
    benchmark::DoNotOptimize(f.membrane.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = kernels::max_threads();
}

void Dense(benchmark::State &state) {
  Fixture f(state);
  for (auto _ : state) {
    kernels::lif_step_dense(f.w, f.input, 0.9, 1.0, f.membrane, f.spikes);
    benchmark::DoNotOptimize(f.membrane.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = kernels::max_threads();
}

void Shapes(benchmark::internal::Benchmark *b) {
  for (auto shape : {std::pair{65, 46}, std::pair{30, 96}, std::pair{1024, 1024}})
    for (int pct : {5, 40})
      b->Args({shape.first, shape.second, pct});
}

} // namespace

BENCHMARK(Reference)->Apply(Shapes);
BENCHMARK(Events)->Apply(Shapes);
BENCHMARK(Dense)->Apply(Shapes);

BENCHMARK_MAIN();
