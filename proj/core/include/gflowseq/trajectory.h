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

// Shared domain types: tokens, observations, step records and trajectories.

#ifndef GFLOWSEQ_TRAJECTORY_H_
#define GFLOWSEQ_TRAJECTORY_H_

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gflowseq {

struct Token {
  int id = 0;
  auto operator<=>(const Token&) const = default;
};

// Output vocabulary of the policy. Layout is fixed: id 0 is [DONE], then the
// environment's action tokens in their declared order, then CoT tokens.
class Vocabulary {
 public:
  static constexpr std::string_view kDoneName = "[DONE]";

  Vocabulary() = default;
  Vocabulary(std::vector<std::string> action_names, int cot_size);

  Token done() const { return Token{0}; }
  Token action(int i) const;
  Token cot(int j) const;

  int size() const { return static_cast<int>(names_.size()); }
  int num_actions() const { return num_actions_; }
  int num_cot() const { return num_cot_; }
  bool Contains(Token t) const { return t.id >= 0 && t.id < size(); }
  bool IsDone(Token t) const { return t.id == 0; }
  bool IsAction(Token t) const { return t.id >= 1 && t.id <= num_actions_; }
  bool IsCot(Token t) const { return t.id > num_actions_ && t.id < size(); }

  const std::string& Name(Token t) const;
  // Throws DataCorruptionError for unknown names.
  Token Find(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
  int num_actions_ = 0;
  int num_cot_ = 0;
};

// Symbolic observation: an ordered list of integer-valued fields, e.g.
// {current=1, target=3}. Field order is part of the identity.
struct Observation {
  std::vector<std::pair<std::string, std::int64_t>> fields;

  // Throws RangeError if the key is absent.
  std::int64_t Get(std::string_view key) const;
  bool Has(std::string_view key) const;
  // Canonical "key=value key=value" form.
  std::string Text() const;

  bool operator==(const Observation&) const = default;
};

struct StepRecord {
  Observation observation;
  std::vector<Token> admissible;  // sorted by id
  std::vector<Token> cot;
  Token action;
  double reward = 0.0;

  bool operator==(const StepRecord&) const = default;
};

struct Trajectory {
  std::string goal;
  std::vector<StepRecord> steps;
  bool terminated = false;
  double terminal_reward = 0.0;
  // State reached after the last step and what may be done there. Empty
  // admissible set once the episode is over.
  Observation final_observation;
  std::vector<Token> final_admissible;

  std::size_t size() const { return steps.size(); }
  bool operator==(const Trajectory&) const = default;

  // Observation / admissible set at prefix i (0 <= i <= size()).
  const Observation& ObservationAt(std::size_t i) const;
  const std::vector<Token>& AdmissibleAt(std::size_t i) const;
  // True when the last recorded action is [DONE].
  bool EndsWithDone(const Vocabulary& vocab) const;
  // Number of non-terminating transitions (the m of z_0..z_m).
  std::size_t NumStates(const Vocabulary& vocab) const;
};

// Strictly positive reward; the argument of every log in the losses.
class ShapedReward {
 public:
  // Throws ShapingError unless value > 0 and finite.
  explicit ShapedReward(double value);
  double value() const { return value_; }

 private:
  double value_;
};

// The first i steps. The result is terminated only when it is the whole
// trajectory and that was terminated. Throws RangeError if i > size().
Trajectory TrajectoryPrefix(const Trajectory& traj, std::size_t i);

// Deterministic, injective text encoding of goal, past states, CoT, actions
// and the current admissible set.
std::string CanonicalHistoryText(const Trajectory& traj,
                                 const Vocabulary& vocab);

// Identity of a trajectory for distribution and diversity bookkeeping:
// goal, initial observation and the action sequence (CoT excluded).
std::string TrajectoryKey(const Trajectory& traj, const Vocabulary& vocab);

// JSON Lines form: one object per line with fields goal, steps,
// terminated, terminal_reward, final_observation, final_admissible.
std::string ToJsonLine(const Trajectory& traj, const Vocabulary& vocab);
Trajectory FromJsonLine(std::string_view line, const Vocabulary& vocab);

std::vector<Trajectory> ReadJsonLines(const std::string& path,
                                      const Vocabulary& vocab);
void WriteJsonLines(const std::string& path,
                    const std::vector<Trajectory>& trajs,
                    const Vocabulary& vocab);

// Shortest round-trip decimal form of a double; locale independent.
std::string FormatDouble(double v);

}  // namespace gflowseq

#endif  // GFLOWSEQ_TRAJECTORY_H_
