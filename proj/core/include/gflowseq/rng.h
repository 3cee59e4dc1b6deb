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

#ifndef GFLOWSEQ_RNG_H_
#define GFLOWSEQ_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace gflowseq {

using Rng = std::mt19937_64;

// Mixes an ordered list of integers into a single 64-bit seed (splitmix64
// chain). Used to derive independent streams such as (run, task, episode).
std::uint64_t MixSeed(std::initializer_list<std::uint64_t> parts);

inline Rng MakeRng(std::initializer_list<std::uint64_t> parts) {
  return Rng(MixSeed(parts));
}

// Uniform double in [0, 1) with 53 random bits; unlike
// std::uniform_real_distribution the result is identical across standard
// library implementations.
double UniformUnit(Rng& rng);

// Uniform integer in [0, n).
std::uint64_t UniformIndex(Rng& rng, std::uint64_t n);

// Samples an index from a normalized log-probability vector.
int SampleFromLogProbs(std::span<const double> log_probs, Rng& rng);

}  // namespace gflowseq

#endif  // GFLOWSEQ_RNG_H_
