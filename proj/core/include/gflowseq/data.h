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

#ifndef GFLOWSEQ_DATA_H_
#define GFLOWSEQ_DATA_H_

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "gflowseq/envs.h"
#include "gflowseq/policy.h"
#include "gflowseq/rng.h"
#include "gflowseq/trajectory.h"

namespace gflowseq {

// Output vocabulary for an environment: [DONE], its actions, then CoT tokens.
Vocabulary MakeVocabulary(const Environment& env, const PolicyConfig& config);

std::unique_ptr<RecurrentPolicy> MakeRecurrentPolicy(
    const Environment& env, const PolicyConfig& config,
    std::uint64_t init_seed);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 4);

  // Evicts the oldest entry when full.
  void Push(Trajectory traj);
  // Uniform with replacement. Throws EmptyBufferError when empty.
  std::vector<Trajectory> Sample(std::size_t k, Rng& rng) const;
  void Clear() { items_.clear(); }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Trajectory>& contents() const { return items_; }

 private:
  std::size_t capacity_;
  std::deque<Trajectory> items_;
};

// Plays one episode from an environment that was just reset.
Trajectory RolloutFrom(const Policy& policy, Environment& env,
                       const ResetResult& start, Rng& rng);
Trajectory Rollout(const Policy& policy, Environment& env,
                   std::uint64_t episode_seed, Rng& rng);

// Moves straight to the target, then takes [DONE] when the config has it.
// Throws GenerationError if the horizon is too short.
Trajectory OracleNumberLine(std::int64_t target, std::int64_t start,
                            const EnvConfig& config);

// "stand" once the hand is worth 17 or more; [DONE] after the hand resolves.
Token OracleBlackjack(const Observation& obs, const std::vector<Token>& admissible);

// Runs the oracle for the episode `episode_seed` selects. Throws ConfigError
// for environments without an oracle.
Trajectory OracleRollout(Environment& env, std::uint64_t episode_seed);

// Fills every step's CoT with `length` copies of a hint token tied to the
// step's action. No-op when `length` is 0.
void AttachOracleCot(Trajectory& traj, const Vocabulary& vocab, int length);

struct SftExample {
  Trajectory history;  // prefix ending at the labeled state
  std::vector<Token> cot;
  Token action;

  // The history with the labeled step appended.
  Trajectory AsTrajectory() const;
  bool operator==(const SftExample&) const = default;
};

std::string ToJsonLine(const SftExample& example, const Vocabulary& vocab);
SftExample SftExampleFromJsonLine(std::string_view line,
                                  const Vocabulary& vocab);
void WriteSftDataset(const std::string& path,
                     const std::vector<SftExample>& examples,
                     const Vocabulary& vocab);
std::vector<SftExample> ReadSftDataset(const std::string& path,
                                       const Vocabulary& vocab);

// One example per step of `episodes` successful oracle runs in DONE mode.
std::vector<SftExample> BuildSftDataset(const EnvConfig& config, int episodes,
                                        const Vocabulary& vocab,
                                        int cot_length, Rng& rng);

}  // namespace gflowseq

#endif  // GFLOWSEQ_DATA_H_
