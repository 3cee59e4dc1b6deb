// Copyright 2026 The gflowseq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <vector>

#include "gflowseq/autodiff.h"
#include "gflowseq/data.h"
#include "gflowseq/envs.h"
#include "gflowseq/eval.h"
#include "gflowseq/losses.h"
#include "gflowseq/policy.h"

namespace gs = gflowseq;
namespace ad = gflowseq::ad;

namespace {

gs::EnvConfig NumberLine(int n_max, int horizon) {
  gs::EnvConfig c;
  c.kind = gs::EnvKind::kNumberLine;
  c.n_min = 0;
  c.n_max = n_max;
  c.horizon = horizon;
  return c;
}

void BM_TapeMlp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    ad::Tape tape;
    auto x = tape.Constant(ad::Tensor(1, n, 0.1));
    auto w1 = tape.Leaf(ad::Tensor(n, n, 0.01));
    auto w2 = tape.Leaf(ad::Tensor(n, 8, 0.02));
    auto y = ad::LogSoftmax(ad::MatMul(ad::Tanh(ad::MatMul(x, w1)), w2));
    auto loss = ad::Pick(y, 3);
    tape.Backward(loss);
    benchmark::DoNotOptimize(tape.Grad(w1));
  }
}
BENCHMARK(BM_TapeMlp)->Arg(16)->Arg(64);

void BM_Rollout(benchmark::State& state) {
  auto env = gs::MakeEnvironment(NumberLine(5, 10));
  auto policy = gs::MakeRecurrentPolicy(*env, gs::PolicyConfig{}, 1);
  gs::Rng rng = gs::MakeRng({1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(gs::Rollout(*policy, *env, rng(), rng));
  }
}
BENCHMARK(BM_Rollout);

void BM_LossAndGradient(benchmark::State& state) {
  const auto kind = static_cast<gs::LossKind>(state.range(0));
  auto cfg = NumberLine(3, 6);
  cfg.done_action = true;
  auto env = gs::MakeEnvironment(cfg);
  auto policy = gs::MakeRecurrentPolicy(*env, gs::PolicyConfig{}, 2);
  gs::Rng rng = gs::MakeRng({2});
  std::vector<gs::Trajectory> batch;
  const auto seed = rng();
  for (int k = 0; k < 8; ++k) batch.push_back(gs::Rollout(*policy, *env, seed, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gs::ComputeLossAndGradient(kind, *policy, *env, batch));
  }
  state.SetLabel(std::string(gs::LossKindName(kind)));
}
BENCHMARK(BM_LossAndGradient)
    ->Arg(static_cast<int>(gs::LossKind::kVarTB))
    ->Arg(static_cast<int>(gs::LossKind::kSubTB))
    ->Arg(static_cast<int>(gs::LossKind::kDB));

void BM_EnumerateTarget(benchmark::State& state) {
  const auto cfg = NumberLine(static_cast<int>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(gs::EnumerateTarget(cfg));
}
BENCHMARK(BM_EnumerateTarget)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
