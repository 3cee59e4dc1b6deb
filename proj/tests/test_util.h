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


// Shared fixtures for the unit tests.

#ifndef GFLOWSEQ_TESTS_TEST_UTIL_H_
#define GFLOWSEQ_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gflowseq/data.h"
#include "gflowseq/envs.h"
#include "gflowseq/policy.h"
#include "gflowseq/rng.h"
#include "gflowseq/trajectory.h"

namespace gflowseq::testing {

// One choice among leaves with fixed rewards, optionally followed by an
// explicit [DONE]. With a DONE action, [DONE] is also admissible at the root
// (terminating with the floor reward), as in the real environments.
class LeafEnv : public Environment {
 public:
  LeafEnv(std::vector<double> rewards, bool done_action)
      : Environment(Config(done_action)), rewards_(std::move(rewards)) {}

  std::vector<std::string> ActionNames() const override {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < rewards_.size(); ++i) {
      out.push_back("leaf" + std::to_string(i));
    }
    return out;
  }
  std::vector<std::string> InputTokenUniverse() const override {
    std::vector<std::string> out = {"goal:toy"};
    for (int i = -1; i < static_cast<int>(rewards_.size()); ++i) {
      out.push_back("obs:chosen=" + std::to_string(i));
    }
    return out;
  }
  EnvStep Step(Token action) override {
    RequireAdmissible(action);
    EnvStep out;
    if (action.id == 0) {
      done_ = true;
      out.reward = chosen_ < 0 ? config_.floor : rewards_[chosen_];
    } else {
      chosen_ = action.id - 1;
      if (!config_.done_action) {
        done_ = true;
        out.reward = rewards_[chosen_];
      }
    }
    out.done = done_;
    out.observation = Observe();
    out.admissible = Admissible();
    return out;
  }
  std::unique_ptr<Environment> Clone() const override {
    return std::make_unique<LeafEnv>(*this);
  }
  bool deterministic() const override { return true; }
  int NumTasks() const override { return 1; }
  ResetResult ResetToTask(int) override {
    chosen_ = -1;
    done_ = false;
    return {"toy", Observe(), Admissible()};
  }
  ShapedReward PrefixReward(const Trajectory& prefix) const override {
    const auto c = prefix.final_observation.Get("chosen");
    return ShapedReward(c < 0 ? config_.floor : rewards_[c]);
  }
  bool Success(const Trajectory& traj) const override {
    return traj.terminated && traj.final_observation.Get("chosen") >= 0;
  }
  double RawReturn(const Trajectory& traj) const override {
    const auto c = traj.final_observation.Get("chosen");
    return c < 0 ? 0.0 : rewards_[c];
  }

 private:
  static EnvConfig Config(bool done_action) {
    EnvConfig c;
    c.kind = EnvKind::kNumberLine;
    c.n_min = 0;
    c.n_max = 1;
    c.horizon = done_action ? 2 : 1;
    c.done_action = done_action;
    return c;
  }
  std::vector<Token> Admissible() const override {
    if (done_) return {};
    if (!config_.done_action) {
      std::vector<Token> out;
      for (std::size_t i = 0; i < rewards_.size(); ++i) {
        out.push_back(Token{static_cast<int>(i) + 1});
      }
      return out;
    }
    if (chosen_ >= 0) return {Token{0}};
    std::vector<Token> out = {Token{0}};
    for (std::size_t i = 0; i < rewards_.size(); ++i) {
      out.push_back(Token{static_cast<int>(i) + 1});
    }
    return out;
  }
  Observation Observe() const { return Observation{{{"chosen", chosen_}}}; }

  std::vector<double> rewards_;
  int chosen_ = -1;
  bool done_ = false;
};

inline EnvConfig NumberLineConfig(int n_min, int n_max, int horizon,
                                  bool done_action) {
  EnvConfig c;
  c.kind = EnvKind::kNumberLine;
  c.n_min = n_min;
  c.n_max = n_max;
  c.horizon = horizon;
  c.done_action = done_action;
  return c;
}

inline PolicyConfig SmallPolicy(int cot_length = 0, double lambda = 1.0) {
  PolicyConfig p;
  p.embedding_dim = 4;
  p.hidden_dim = 6;
  p.cot_length = cot_length;
  p.cot_vocab = 3;
  p.lambda = lambda;
  p.init_scale = 0.5;
  return p;
}

// Plays uniformly random admissible actions.
inline Trajectory RandomRollout(Environment& env, std::uint64_t seed,
                                Rng& rng) {
  const ResetResult r = env.Reset(seed);
  Trajectory traj;
  traj.goal = r.goal;
  Observation obs = r.observation;
  std::vector<Token> adm = r.admissible;
  while (!adm.empty()) {
    StepRecord s;
    s.observation = obs;
    s.admissible = adm;
    s.action = adm[UniformIndex(rng, adm.size())];
    const EnvStep st = env.Step(s.action);
    s.reward = st.reward;
    traj.steps.push_back(s);
    obs = st.observation;
    adm = st.admissible;
    if (st.done) {
      traj.terminated = true;
      traj.terminal_reward = st.reward;
      break;
    }
  }
  traj.final_observation = obs;
  traj.final_admissible = adm;
  return traj;
}

inline double MaxAbsDiff(const std::vector<double>& a,
                         const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace gflowseq::testing

#endif  // GFLOWSEQ_TESTS_TEST_UTIL_H_
