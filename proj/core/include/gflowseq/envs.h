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

// Environment contract and the three concrete environments: NumberLine,
// Blackjack and SequencePattern.
//
// Token ids follow Vocabulary's layout: 0 is [DONE] and the environment's
// i-th action name has id i + 1. Environments never see CoT tokens.
//
// Two action modes exist. Without a DONE action the environment ends
// episodes itself (goal reached, hand resolved, horizon hit). With a DONE
// action every episode ends with an explicit [DONE] step; reaching a
// resolved state only collapses the admissible set to {[DONE]}, and at step
// index horizon-1 [DONE] is the sole admissible action.

#ifndef GFLOWSEQ_ENVS_H_
#define GFLOWSEQ_ENVS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gflowseq/rng.h"
#include "gflowseq/trajectory.h"

namespace gflowseq {

enum class EnvKind { kNumberLine, kBlackjack, kSequencePattern };

std::string_view EnvKindName(EnvKind kind);
// Throws ConfigError for unknown names.
EnvKind ParseEnvKind(std::string_view name);

struct EnvConfig {
  EnvKind kind = EnvKind::kNumberLine;
  int n_min = 0;
  int n_max = 5;
  int horizon = 0;  // 0 selects the environment default
  double scaling = 100.0;
  double floor = 1e-10;
  std::uint64_t seed = 0;
  bool done_action = false;
  // SequencePattern only.
  double high_reward = 100.0;
  std::vector<std::int64_t> fixed_sequence;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  // NumberLine 2*n_max, Blackjack 10, SequencePattern 1 (2 with DONE).
  int ResolvedHorizon() const;
};

struct ResetResult {
  std::string goal;
  Observation observation;
  std::vector<Token> admissible;
};

struct EnvStep {
  double reward = 0.0;
  Observation observation;
  std::vector<Token> admissible;
  bool done = false;
};

class Environment {
 public:
  explicit Environment(EnvConfig config);
  virtual ~Environment() = default;

  const EnvConfig& config() const { return config_; }
  int horizon() const { return horizon_; }
  bool done_action() const { return config_.done_action; }

  virtual std::vector<std::string> ActionNames() const = 0;
  // Input-token universe (goal words and key=value observation fields) the
  // policy needs an embedding for.
  virtual std::vector<std::string> InputTokenUniverse() const = 0;

  // Deterministic in (config, episode_seed).
  ResetResult Reset(std::uint64_t episode_seed);
  // Throws ContractError for inadmissible actions.
  virtual EnvStep Step(Token action) = 0;
  virtual std::unique_ptr<Environment> Clone() const = 0;

  // Transitions are a function of (state, action) only.
  virtual bool deterministic() const = 0;
  // Number of distinct reset states; 0 when not enumerable.
  virtual int NumTasks() const = 0;
  // Throws UnsupportedEnvironmentError when NumTasks() == 0.
  virtual ResetResult ResetToTask(int task) = 0;

  // R(z_{0:i}⊤): shaped reward of terminating at the prefix's current state.
  virtual ShapedReward PrefixReward(const Trajectory& prefix) const = 0;
  virtual bool Success(const Trajectory& traj) const = 0;
  // Unshaped environment reward of a finished trajectory.
  virtual double RawReturn(const Trajectory& traj) const = 0;

  std::vector<Token> current_admissible() const { return Admissible(); }

 protected:
  virtual ResetResult ResetWithSeed(std::uint64_t episode_seed);
  virtual std::vector<Token> Admissible() const = 0;
  void RequireAdmissible(Token action) const;

  EnvConfig config_;
  int horizon_;
};

std::unique_ptr<Environment> MakeEnvironment(const EnvConfig& config);

// R(c, y) = l / (|c - y| + 1).
ShapedReward ShapeNumberLine(std::int64_t target, std::int64_t current,
                             double scaling);
// R = max(eps, (r + 1) * 10) for r in {-1, 0, 1}; throws ContractError
// otherwise.
ShapedReward ShapeBlackjack(int raw_reward, double eps);

// Continuations consistent with the shown prefix: the arithmetic rule
// S(n) = S(n-1) + k and the additive rule F(n) = F(n-1) + F(n-2), each only
// when the prefix obeys it. Sorted, deduplicated.
std::vector<std::int64_t> ValidContinuations(
    const std::vector<std::int64_t>& shown);
// Both rule continuations plus distractors, 4 distinct values, sorted.
std::vector<std::int64_t> CandidateSet(const std::vector<std::int64_t>& shown);
// high when proposed is a valid continuation, low otherwise. Throws
// ContractError when fewer than 3 numbers are shown.
ShapedReward SequenceReward(const std::vector<std::int64_t>& shown,
                            std::int64_t proposed, double high = 100.0,
                            double low = 1e-10);

class NumberLineEnv : public Environment {
 public:
  explicit NumberLineEnv(EnvConfig config);

  std::vector<std::string> ActionNames() const override { return {"+", "-"}; }
  std::vector<std::string> InputTokenUniverse() const override;
  EnvStep Step(Token action) override;
  std::unique_ptr<Environment> Clone() const override;
  bool deterministic() const override { return true; }
  int NumTasks() const override;
  ResetResult ResetToTask(int task) override;
  ShapedReward PrefixReward(const Trajectory& prefix) const override;
  bool Success(const Trajectory& traj) const override;
  double RawReturn(const Trajectory& traj) const override;

  // Starts an episode at an explicit (target, start) pair; start may equal
  // target.
  ResetResult ResetTo(std::int64_t target, std::int64_t start);

  static constexpr Token kPlus{1};
  static constexpr Token kMinus{2};

 private:
  std::vector<Token> Admissible() const override;
  Observation Observe() const;

  std::int64_t target_ = 0;
  std::int64_t current_ = 0;
  int t_ = 0;
  bool done_ = false;
};

class BlackjackEnv : public Environment {
 public:
  explicit BlackjackEnv(EnvConfig config);

  std::vector<std::string> ActionNames() const override {
    return {"stand", "hit"};
  }
  std::vector<std::string> InputTokenUniverse() const override;
  EnvStep Step(Token action) override;
  std::unique_ptr<Environment> Clone() const override;
  bool deterministic() const override { return false; }
  int NumTasks() const override { return 0; }
  ResetResult ResetToTask(int task) override;
  ShapedReward PrefixReward(const Trajectory& prefix) const override;
  bool Success(const Trajectory& traj) const override;
  double RawReturn(const Trajectory& traj) const override;

  // Best total of a hand counting one ace as 11 when that does not bust.
  static int HandValue(int sum, bool has_ace);

  static constexpr Token kStand{1};
  static constexpr Token kHit{2};

 protected:
  ResetResult ResetWithSeed(std::uint64_t episode_seed) override;

 private:
  std::vector<Token> Admissible() const override;
  Observation Observe() const;
  int DrawCard();
  void Resolve(int outcome);
  void PlayDealer();

  Rng rng_;
  int player_sum_ = 0;  // aces counted as 1
  bool player_ace_ = false;
  int dealer_visible_ = 0;
  int dealer_sum_ = 0;
  bool dealer_ace_ = false;
  int t_ = 0;
  bool resolved_ = false;
  int outcome_ = 0;
  bool done_ = false;
};

class SequencePatternEnv : public Environment {
 public:
  explicit SequencePatternEnv(EnvConfig config);

  std::vector<std::string> ActionNames() const override;
  std::vector<std::string> InputTokenUniverse() const override;
  EnvStep Step(Token action) override;
  std::unique_ptr<Environment> Clone() const override;
  bool deterministic() const override { return true; }
  int NumTasks() const override { return static_cast<int>(tasks_.size()); }
  ResetResult ResetToTask(int task) override;
  ShapedReward PrefixReward(const Trajectory& prefix) const override;
  bool Success(const Trajectory& traj) const override;
  double RawReturn(const Trajectory& traj) const override;

  const std::vector<std::vector<std::int64_t>>& tasks() const {
    return tasks_;
  }
  Token TokenForValue(std::int64_t v) const;
  std::int64_t ValueOf(Token t) const;

 private:
  std::vector<Token> Admissible() const override;
  Observation Observe() const;
  static std::vector<std::int64_t> ShownOf(const Observation& obs);

  std::vector<std::vector<std::int64_t>> tasks_;
  std::int64_t max_value_ = 0;
  std::vector<std::int64_t> shown_;
  std::int64_t chosen_ = 0;
  int t_ = 0;
  bool resolved_ = false;
  bool done_ = false;
};

}  // namespace gflowseq

#endif  // GFLOWSEQ_ENVS_H_
