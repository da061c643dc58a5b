// SPDX-License-Identifier: Apache-2.0
// Throughput of the hot paths at desk scale. Run with OPENBLAS_NUM_THREADS=1.
#include <benchmark/benchmark.h>

#include "sstg/autodiff/ops.hpp"
#include "sstg/data/synth.hpp"
#include "sstg/rnn/lstm.hpp"
#include "sstg/train/adam.hpp"
#include "sstg/train/trainer.hpp"
#include "tiny.hpp"

using namespace sstg;
using ad::Tape;
using ad::Tensor;
using fixture::random_tensor;

namespace {

// Batch of N first-layer convolutions over 30 s at 32 Hz.
void BM_Conv1dForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor x = random_tensor({n, 8, 480}, 1), w = random_tensor({16, 8, 7}, 2), b = random_tensor({16}, 3);
  for (auto _ : state) {
    Tape tape = Tape::inference();
    benchmark::DoNotOptimize(ad::conv1d(tape, x, w, b, 1, 3));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Conv1dForward)->Arg(1)->Arg(16)->Arg(64);

void BM_Conv1dBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor x = random_tensor({n, 8, 480}, 1), w = random_tensor({16, 8, 7}, 2), b = random_tensor({16}, 3);
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  for (auto _ : state) {
    w.zero_grad();
    b.zero_grad();
    Tape tape;
    tape.backward(ad::sum(tape, ad::conv1d(tape, x, w, b, 1, 3)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Conv1dBackward)->Arg(1)->Arg(16)->Arg(64);

// Three-deep bidirectional stack over a 9-epoch window, batch of 32 windows.
void BM_BiLSTMStack(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  nn::Seeder seeds(4);
  auto stack = rnn::BiLSTMStack::make(64, hidden, 3, seeds);
  std::vector<Tensor> seq;
  for (std::uint64_t t = 0; t < 9; ++t) seq.push_back(random_tensor({32, 64}, t));
  for (auto _ : state) {
    Tape tape = Tape::inference();
    benchmark::DoNotOptimize(stack.forward(tape, seq));
  }
}
BENCHMARK(BM_BiLSTMStack)->Arg(8)->Arg(128);

void BM_StagerPredict(benchmark::State& state) {
  model::Stager m(fixture::tiny_config(9, 32.0));
  fixture::mark_bn_initialized(m);
  Tensor window = random_tensor({9, 1, 960}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(window));
}
BENCHMARK(BM_StagerPredict)->Unit(benchmark::kMillisecond);

// One optimizer step on a batch of W=9 windows from synthetic recordings.
void BM_TrainStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  auto sets = data::synth_generate(2, 60, 32.0, 3);
  model::Stager m(fixture::tiny_config(9, 32.0));
  auto reg = m.registry();
  train::AdamState adam(reg);
  auto windows = train::training_windows(sets, 9, 1);
  windows.resize(batch);
  for (auto _ : state) benchmark::DoNotOptimize(train::train_step(m, sets, windows, adam, reg));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
