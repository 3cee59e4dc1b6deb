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

#include "gflowseq/data.h"

#include <algorithm>
#include <fstream>
#include <utility>

#include "gflowseq/error.h"
#include "json.hpp"

namespace gflowseq {
namespace {

using Json = nlohmann::ordered_json;

void Record(Trajectory& traj, const Observation& obs,
            const std::vector<Token>& admissible, std::vector<Token> cot,
            Token action, const EnvStep& step) {
  traj.steps.push_back(
      StepRecord{obs, admissible, std::move(cot), action, step.reward});
  traj.final_observation = step.observation;
  traj.final_admissible = step.admissible;
  if (step.done) {
    traj.terminated = true;
    traj.terminal_reward = step.reward;
  }
}

Trajectory Start(const ResetResult& r) {
  Trajectory traj;
  traj.goal = r.goal;
  traj.final_observation = r.observation;
  traj.final_admissible = r.admissible;
  return traj;
}

bool Contains(const std::vector<Token>& set, Token t) {
  return std::find(set.begin(), set.end(), t) != set.end();
}

}  // namespace

Vocabulary MakeVocabulary(const Environment& env, const PolicyConfig& config) {
  return Vocabulary(env.ActionNames(),
                    config.cot_length > 0 ? config.cot_vocab : 0);
}

std::unique_ptr<RecurrentPolicy> MakeRecurrentPolicy(
    const Environment& env, const PolicyConfig& config,
    std::uint64_t init_seed) {
  return std::make_unique<RecurrentPolicy>(
      config, MakeVocabulary(env, config), env.InputTokenUniverse(),
      env.horizon(), init_seed);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("buffer capacity must be >= 1");
}

void ReplayBuffer::Push(Trajectory traj) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(traj));
}

std::vector<Trajectory> ReplayBuffer::Sample(std::size_t k, Rng& rng) const {
  if (items_.empty()) throw EmptyBufferError("sampling from an empty buffer");
  std::vector<Trajectory> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(items_[UniformIndex(rng, items_.size())]);
  }
  return out;
}

Trajectory RolloutFrom(const Policy& policy, Environment& env,
                       const ResetResult& start, Rng& rng) {
  Trajectory traj = Start(start);
  if (traj.final_admissible.empty()) {
    traj.terminated = true;
    traj.terminal_reward = env.PrefixReward(traj).value();
    return traj;
  }
  auto session = policy.Begin(start.goal);
  const int limit = env.horizon() + 1;
  while (!traj.terminated) {
    if (static_cast<int>(traj.steps.size()) >= limit) {
      throw ContractError("episode exceeded the horizon");
    }
    const Observation obs = traj.final_observation;
    const std::vector<Token> adm = traj.final_admissible;
    PolicyOutput out = session->Act(obs, adm, rng);
    const EnvStep step = env.Step(out.action);
    Record(traj, obs, adm, std::move(out.cot), out.action, step);
  }
  return traj;
}

Trajectory Rollout(const Policy& policy, Environment& env,
                   std::uint64_t episode_seed, Rng& rng) {
  const ResetResult start = env.Reset(episode_seed);
  return RolloutFrom(policy, env, start, rng);
}

Trajectory OracleNumberLine(std::int64_t target, std::int64_t start,
                            const EnvConfig& config) {
  EnvConfig cfg = config;
  cfg.kind = EnvKind::kNumberLine;
  NumberLineEnv env(cfg);
  const std::int64_t gap = std::llabs(target - start);
  const std::int64_t budget =
      cfg.done_action ? env.horizon() - 1 : env.horizon();
  if (gap > budget) {
    throw GenerationError("target " + std::to_string(target) +
                          " unreachable from " + std::to_string(start) +
                          " within horizon " + std::to_string(env.horizon()));
  }
  Trajectory traj = Start(env.ResetTo(target, start));
  if (traj.final_admissible.empty()) {
    traj.terminated = true;
    traj.terminal_reward = env.PrefixReward(traj).value();
  }
  while (!traj.terminated) {
    const Observation obs = traj.final_observation;
    const std::vector<Token> adm = traj.final_admissible;
    const std::int64_t y = obs.Get("current");
    Token a = y == target ? Token{0}
                          : (y < target ? NumberLineEnv::kPlus
                                        : NumberLineEnv::kMinus);
    Record(traj, obs, adm, {}, a, env.Step(a));
  }
  return traj;
}

Token OracleBlackjack(const Observation& obs,
                      const std::vector<Token>& admissible) {
  if (obs.Get("resolved") != 0 || !Contains(admissible, BlackjackEnv::kHit)) {
    if (Contains(admissible, Token{0})) return Token{0};
  }
  return obs.Get("player") >= 17 ? BlackjackEnv::kStand : BlackjackEnv::kHit;
}

Trajectory OracleRollout(Environment& env, std::uint64_t episode_seed) {
  const ResetResult start = env.Reset(episode_seed);
  switch (env.config().kind) {
    case EnvKind::kNumberLine:
      return OracleNumberLine(start.observation.Get("target"),
                              start.observation.Get("current"), env.config());
    case EnvKind::kBlackjack: {
      Trajectory traj = Start(start);
      while (!traj.terminated) {
        const Observation obs = traj.final_observation;
        const std::vector<Token> adm = traj.final_admissible;
        const Token a = OracleBlackjack(obs, adm);
        Record(traj, obs, adm, {}, a, env.Step(a));
      }
      return traj;
    }
    case EnvKind::kSequencePattern:
      break;
  }
  throw ConfigError("env.kind: " + std::string(EnvKindName(env.config().kind)) +
                    " has no oracle");
}

void AttachOracleCot(Trajectory& traj, const Vocabulary& vocab, int length) {
  if (length <= 0) return;
  if (vocab.num_cot() == 0) throw ConfigError("vocabulary has no CoT tokens");
  for (auto& s : traj.steps) {
    s.cot.assign(static_cast<std::size_t>(length),
                 vocab.cot(s.action.id % vocab.num_cot()));
  }
}

Trajectory SftExample::AsTrajectory() const {
  Trajectory traj = history;
  traj.steps.push_back(StepRecord{history.final_observation,
                                  history.final_admissible, cot, action, 0.0});
  traj.terminated = false;
  traj.final_admissible.clear();
  return traj;
}

std::string ToJsonLine(const SftExample& example, const Vocabulary& vocab) {
  Json j;
  j["history"] = Json::parse(ToJsonLine(example.history, vocab));
  Json cot = Json::array();
  for (Token t : example.cot) cot.push_back(vocab.Name(t));
  j["cot"] = std::move(cot);
  j["action"] = vocab.Name(example.action);
  return j.dump();
}

SftExample SftExampleFromJsonLine(std::string_view line,
                                  const Vocabulary& vocab) {
  SftExample ex;
  try {
    const Json j = Json::parse(line);
    ex.history = FromJsonLine(j.at("history").dump(), vocab);
    for (const auto& c : j.at("cot")) {
      ex.cot.push_back(vocab.Find(c.get<std::string>()));
    }
    ex.action = vocab.Find(j.at("action").get<std::string>());
  } catch (const Json::exception& e) {
    throw DataCorruptionError(std::string("bad SFT example: ") + e.what());
  }
  return ex;
}

void WriteSftDataset(const std::string& path,
                     const std::vector<SftExample>& examples,
                     const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& ex : examples) out << ToJsonLine(ex, vocab) << '\n';
}

std::vector<SftExample> ReadSftDataset(const std::string& path,
                                       const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<SftExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(SftExampleFromJsonLine(line, vocab));
  }
  return out;
}

std::vector<SftExample> BuildSftDataset(const EnvConfig& config, int episodes,
                                        const Vocabulary& vocab,
                                        int cot_length, Rng& rng) {
  EnvConfig cfg = config;
  cfg.done_action = true;
  auto env = MakeEnvironment(cfg);
  std::vector<SftExample> out;
  const long max_attempts = 1000L * std::max(episodes, 1);
  long attempts = 0;
  for (int got = 0; got < episodes;) {
    if (++attempts > max_attempts) {
      throw GenerationError("oracle produced too few successful episodes");
    }
    Trajectory traj = OracleRollout(*env, rng());
    if (!env->Success(traj)) continue;
    AttachOracleCot(traj, vocab, cot_length);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const StepRecord& s = traj.steps[t];
      out.push_back(SftExample{TrajectoryPrefix(traj, t), s.cot, s.action});
    }
    ++got;
  }
  return out;
}

}  // namespace gflowseq
