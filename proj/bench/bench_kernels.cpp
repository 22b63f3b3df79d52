#include <benchmark/benchmark.h>

#include <random>

#include "tpsl/data.hpp"
#include "tpsl/kernels.hpp"
#include "tpsl/pipeline.hpp"

namespace {

struct PslBatch {
  std::vector<double> probs;
  std::vector<std::int32_t> labels;
};

PslBatch make_psl_batch(std::size_t instances) {
  std::mt19937_64 rng(1);
  std::gamma_distribution<double> g(1.0, 1.0);
  std::uniform_int_distribution<std::int32_t> label(0, 2);
  PslBatch b;
  for (std::size_t i = 0; i < 3 * instances; ++i) {
    double a = g(rng), c = g(rng), d = g(rng), s = a + c + d;
    b.probs.insert(b.probs.end(), {a / s, c / s, d / s});
    b.labels.push_back(label(rng));
  }
  return b;
}

template <class Kernel>
void psl_batch(benchmark::State& state, Kernel kernel) {
  const PslBatch b = make_psl_batch(static_cast<std::size_t>(state.range(0)));
  const auto rules = tpsl::default_rule_set(tpsl::Scheme::Clinical3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel(tpsl::Scheme::Clinical3, b.probs, b.labels, rules));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PslSerial(benchmark::State& s) { psl_batch(s, tpsl::kernels::psl_loss_batch_serial); }
void BM_PslParallel(benchmark::State& s) { psl_batch(s, tpsl::kernels::psl_loss_batch_parallel); }
BENCHMARK(BM_PslSerial)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_PslParallel)->Range(1 << 10, 1 << 16);

template <class Kernel>
void batch_loss(benchmark::State& state, Kernel kernel) {
  tpsl::SynthConfig cfg;
  cfg.num_documents = 50;
  const auto rules = tpsl::default_rule_set(tpsl::Scheme::Clinical3);
  const auto data = tpsl::prepare_training_set(tpsl::synth_generate(cfg), rules, 1);
  auto params = tpsl::ClassifierParams::zeros(tpsl::Scheme::Clinical3, tpsl::kFeatureDim);
  std::vector<std::size_t> ids(data.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernel(data, ids, params, 5.0, rules, tpsl::GroundingGate::Predicted));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ids.size()));
}

void BM_LossSerial(benchmark::State& s) { batch_loss(s, tpsl::kernels::batch_loss_serial); }
void BM_LossParallel(benchmark::State& s) { batch_loss(s, tpsl::kernels::batch_loss_parallel); }
BENCHMARK(BM_LossSerial);
BENCHMARK(BM_LossParallel);

}  // namespace

BENCHMARK_MAIN();
