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

// Non-Markovian autoregressive policies.
//
// A policy emits, at every state, `cot_length` CoT tokens followed by one
// action drawn from the admissible set. The forward log-probability of a
// step is
//
//   log P_F = log P_action(a | z, c) + lambda * log P_cot(c | z)
//
// and the termination log-probability log P_F(DONE | z) is the mass the
// admissible-masked action distribution puts on [DONE]. Sampling and
// teacher-forced scoring run the same tape operations, so a score computed
// right after sampling is bit-identical to the sampling-time value.

#ifndef GFLOWSEQ_POLICY_H_
#define GFLOWSEQ_POLICY_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gflowseq/autodiff.h"
#include "gflowseq/rng.h"
#include "gflowseq/trajectory.h"

namespace gflowseq {

// log(1e-30); stands in for log P_F(DONE | z) where DONE is inadmissible.
inline constexpr double kDoneLogFloor = -69.07755278982137;

struct PolicyConfig {
  int embedding_dim = 16;
  int hidden_dim = 32;
  int cot_length = 0;
  int cot_vocab = 4;
  double lambda = 0.4;
  double temperature = 1.0;
  bool markovian = false;
  double init_scale = 0.1;

  void Validate() const;
};

// Named dense tensors; the sole trainable state.
struct PolicyParameters {
  std::vector<std::string> names;
  std::vector<ad::Tensor> tensors;

  std::size_t NumScalars() const;
  bool SameShapes(const PolicyParameters& other) const;
  bool AllFinite() const;
  // Zero tensors with identical shapes.
  PolicyParameters ZerosLike() const;
  bool operator==(const PolicyParameters&) const = default;
};

// Flat little-endian float64 dump plus a JSON manifest listing names and
// shapes. `meta_json` (a JSON object text) is stored under "meta".
void SaveParameters(const std::string& bin_path, const std::string& json_path,
                    const PolicyParameters& params,
                    const std::string& meta_json = "{}");
// Throws IoError / DataCorruptionError.
PolicyParameters LoadParameters(const std::string& bin_path,
                                const std::string& json_path);
// The "meta" object of a manifest, serialized as JSON text.
std::string LoadParametersMeta(const std::string& json_path);

struct StepScore {
  ad::Var log_p_action;
  ad::Var log_p_cot;
  ad::Var log_p_forward;
  ad::Var log_p_done;  // kDoneLogFloor constant when DONE is inadmissible
  bool done_admissible = false;
};

struct TrajectoryScore {
  std::vector<StepScore> steps;
  ad::Var final_log_p_done;
  bool final_done_admissible = false;

  // log P_F(DONE | z_{0:i}) for 0 <= i <= steps.size().
  ad::Var LogPDone(std::size_t i) const;
  bool DoneAdmissible(std::size_t i) const;
};

struct PolicyOutput {
  double log_p_cot = 0.0;
  double log_p_action = 0.0;
  double log_p_forward = 0.0;
  std::vector<Token> cot;
  Token action;
};

class PolicySession {
 public:
  virtual ~PolicySession() = default;
  // Samples CoT and an action at the current state and appends them to the
  // session's history. `admissible` must be non-empty.
  virtual PolicyOutput Act(const Observation& obs,
                           const std::vector<Token>& admissible, Rng& rng) = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;

  virtual const PolicyConfig& config() const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual const PolicyParameters& parameters() const = 0;
  virtual PolicyParameters& mutable_parameters() = 0;
  virtual std::unique_ptr<Policy> Clone() const = 0;
  // Sampling/scoring temperature alpha.
  virtual void SetTemperature(double alpha) = 0;

  // Leaf nodes for every parameter tensor, in parameters() order.
  std::vector<ad::Var> Bind(ad::Tape& tape) const;

  // Teacher-forced re-scoring of a recorded trajectory. Throws
  // DataCorruptionError if a recorded token is not allowed where it occurs.
  virtual TrajectoryScore Score(ad::Tape& tape,
                                std::span<const ad::Var> params,
                                const Trajectory& traj) const = 0;

  virtual std::unique_ptr<PolicySession> Begin(const std::string& goal) const = 0;
};

// log P_F of recorded step t; RangeError if t is out of range.
ad::Var LogPForwardOf(const Policy& policy, ad::Tape& tape,
                      std::span<const ad::Var> params, const Trajectory& traj,
                      std::size_t t);

// log P_F(DONE | prefix) at the prefix's current state, and whether DONE was
// admissible there (if not, the value is kDoneLogFloor).
std::pair<ad::Var, bool> TerminalLogProb(const Policy& policy, ad::Tape& tape,
                                         std::span<const ad::Var> params,
                                         const Trajectory& prefix);

// Recurrent summarizer over embedded history tokens:
//   h <- tanh(sum(embed[tokens]) * w_in + h * w_rec + b_rec)
//   logits = h * w_out + b_out
// Frames are the goal, then per step: observation (+ step index), each CoT
// token, the action. Markovian mode restarts from h = 0 at every
// observation and drops the goal frame.
class RecurrentPolicy : public Policy {
 public:
  RecurrentPolicy(PolicyConfig config, Vocabulary vocab,
                  std::vector<std::string> input_tokens, int horizon,
                  std::uint64_t init_seed);

  const PolicyConfig& config() const override { return config_; }
  const Vocabulary& vocabulary() const override { return vocab_; }
  const PolicyParameters& parameters() const override { return params_; }
  PolicyParameters& mutable_parameters() override { return params_; }
  std::unique_ptr<Policy> Clone() const override;
  void SetTemperature(double alpha) override;

  TrajectoryScore Score(ad::Tape& tape, std::span<const ad::Var> params,
                        const Trajectory& traj) const override;
  std::unique_ptr<PolicySession> Begin(const std::string& goal) const override;

  // Hidden state summarizing the prefix up to (and including) its current
  // observation.
  std::vector<double> EncodeHistory(const Trajectory& prefix) const;
  // Samples CoT and an action starting from an explicit hidden state.
  PolicyOutput SampleFrom(const std::vector<double>& hidden,
                          const std::vector<Token>& admissible,
                          Rng& rng) const;

  const std::vector<std::string>& input_vocabulary() const {
    return input_names_;
  }
  int InputId(const std::string& token) const;

  // Internal building blocks, shared by sessions and scoring.
  struct Frames;

 private:
  friend class RecurrentSession;

  PolicyConfig config_;
  Vocabulary vocab_;
  std::vector<std::string> input_names_;
  std::unordered_map<std::string, int> input_index_;
  int horizon_;
  PolicyParameters params_;
};

// Table of logits keyed by the canonical history text of each prefix.
// Supports cot_length == 0 only. Used for analytically constructed policies
// and as a reference in tests.
class TabularPolicy : public Policy {
 public:
  TabularPolicy(PolicyConfig config, Vocabulary vocab,
                std::vector<std::string> keys);

  const PolicyConfig& config() const override { return config_; }
  const Vocabulary& vocabulary() const override { return vocab_; }
  const PolicyParameters& parameters() const override { return params_; }
  PolicyParameters& mutable_parameters() override { return params_; }
  std::unique_ptr<Policy> Clone() const override;
  void SetTemperature(double alpha) override;

  TrajectoryScore Score(ad::Tape& tape, std::span<const ad::Var> params,
                        const Trajectory& traj) const override;
  std::unique_ptr<PolicySession> Begin(const std::string& goal) const override;

  // Logits over the whole vocabulary for the prefix with this key.
  void SetLogits(const std::string& key, const std::vector<double>& logits);
  int RowOf(const std::string& key) const;

 private:
  friend class TabularSession;

  PolicyConfig config_;
  Vocabulary vocab_;
  std::unordered_map<std::string, int> rows_;
  PolicyParameters params_;
};

}  // namespace gflowseq

#endif  // GFLOWSEQ_POLICY_H_
