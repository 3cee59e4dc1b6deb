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

#include "gflowseq/envs.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "gflowseq/error.h"

namespace gflowseq {
namespace {

std::vector<Token> Sorted(std::vector<Token> v) {
  std::sort(v.begin(), v.end());
  return v;
}

bool IsArithmetic(const std::vector<std::int64_t>& s) {
  for (std::size_t i = 2; i < s.size(); ++i) {
    if (s[i] - s[i - 1] != s[1] - s[0]) return false;
  }
  return true;
}

bool IsAdditive(const std::vector<std::int64_t>& s) {
  for (std::size_t i = 2; i < s.size(); ++i) {
    if (s[i] != s[i - 1] + s[i - 2]) return false;
  }
  return true;
}

}  // namespace

std::string_view EnvKindName(EnvKind kind) {
  switch (kind) {
    case EnvKind::kNumberLine: return "numberline";
    case EnvKind::kBlackjack: return "blackjack";
    case EnvKind::kSequencePattern: return "sequence_pattern";
  }
  return "unknown";
}

EnvKind ParseEnvKind(std::string_view name) {
  if (name == "numberline") return EnvKind::kNumberLine;
  if (name == "blackjack") return EnvKind::kBlackjack;
  if (name == "sequence_pattern") return EnvKind::kSequencePattern;
  throw ConfigError("env.kind: unknown environment '" + std::string(name) +
                    "'");
}

void EnvConfig::Validate() const {
  if (kind == EnvKind::kNumberLine && !(n_min < n_max)) {
    throw ConfigError("env.n_min: must be < n_max");
  }
  if (horizon < 0) throw ConfigError("env.horizon: must be >= 1");
  if (!(scaling > 0.0)) throw ConfigError("env.scaling: must be > 0");
  if (!(floor > 0.0)) throw ConfigError("env.floor: must be > 0");
  if (!(high_reward > floor)) {
    throw ConfigError("env.high_reward: must exceed env.floor");
  }
  if (kind == EnvKind::kSequencePattern && !fixed_sequence.empty()) {
    if (fixed_sequence.size() < 3) {
      throw ConfigError("env.fixed_sequence: needs at least 3 numbers");
    }
    for (auto v : fixed_sequence) {
      if (v < 0) throw ConfigError("env.fixed_sequence: values must be >= 0");
    }
    if (ValidContinuations(fixed_sequence).empty()) {
      throw ConfigError("env.fixed_sequence: matches neither rule");
    }
  }
  if (ResolvedHorizon() < 1) throw ConfigError("env.horizon: must be >= 1");
  if (done_action && ResolvedHorizon() < 2) {
    throw ConfigError("env.horizon: must be >= 2 with a DONE action");
  }
}

int EnvConfig::ResolvedHorizon() const {
  if (horizon > 0) return horizon;
  switch (kind) {
    case EnvKind::kNumberLine: return 2 * n_max;
    case EnvKind::kBlackjack: return 10;
    case EnvKind::kSequencePattern: return done_action ? 2 : 1;
  }
  return 1;
}

Environment::Environment(EnvConfig config)
    : config_(std::move(config)), horizon_(config_.ResolvedHorizon()) {
  config_.Validate();
}

ResetResult Environment::Reset(std::uint64_t episode_seed) {
  return ResetWithSeed(episode_seed);
}

ResetResult Environment::ResetWithSeed(std::uint64_t episode_seed) {
  Rng rng = MakeRng({config_.seed, episode_seed});
  const auto task = UniformIndex(rng, static_cast<std::uint64_t>(NumTasks()));
  return ResetToTask(static_cast<int>(task));
}

void Environment::RequireAdmissible(Token action) const {
  const auto adm = Admissible();
  if (std::find(adm.begin(), adm.end(), action) == adm.end()) {
    throw ContractError("inadmissible action id " + std::to_string(action.id));
  }
}

std::unique_ptr<Environment> MakeEnvironment(const EnvConfig& config) {
  switch (config.kind) {
    case EnvKind::kNumberLine:
      return std::make_unique<NumberLineEnv>(config);
    case EnvKind::kBlackjack:
      return std::make_unique<BlackjackEnv>(config);
    case EnvKind::kSequencePattern:
      return std::make_unique<SequencePatternEnv>(config);
  }
  throw ConfigError("env.kind: unsupported");
}

ShapedReward ShapeNumberLine(std::int64_t target, std::int64_t current,
                             double scaling) {
  if (!(scaling > 0.0)) throw ContractError("scaling must be > 0");
  const double gap = static_cast<double>(std::llabs(target - current));
  return ShapedReward(scaling / (gap + 1.0));
}

ShapedReward ShapeBlackjack(int raw_reward, double eps) {
  if (raw_reward < -1 || raw_reward > 1) {
    throw ContractError("blackjack raw reward must be in {-1, 0, 1}, got " +
                        std::to_string(raw_reward));
  }
  return ShapedReward(std::max(eps, (raw_reward + 1) * 10.0));
}

std::vector<std::int64_t> ValidContinuations(
    const std::vector<std::int64_t>& shown) {
  std::vector<std::int64_t> out;
  if (shown.size() < 3) return out;
  const std::size_t n = shown.size();
  if (IsArithmetic(shown)) out.push_back(shown[n - 1] + (shown[1] - shown[0]));
  if (IsAdditive(shown)) out.push_back(shown[n - 1] + shown[n - 2]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::int64_t> CandidateSet(const std::vector<std::int64_t>& shown) {
  if (shown.size() < 3) throw ContractError("need at least 3 shown numbers");
  const std::size_t n = shown.size();
  std::set<std::int64_t> c = {shown[n - 1] + (shown[n - 1] - shown[n - 2]),
                              shown[n - 1] + shown[n - 2]};
  const std::int64_t lo = *c.begin();
  const std::int64_t hi = *c.rbegin();
  for (std::int64_t d = 1; c.size() < 4; ++d) {
    if (c.size() < 4) c.insert(hi + d);
    if (c.size() < 4 && lo - d >= 0) c.insert(lo - d);
  }
  return {c.begin(), c.end()};
}

ShapedReward SequenceReward(const std::vector<std::int64_t>& shown,
                            std::int64_t proposed, double high, double low) {
  if (shown.size() < 3) throw ContractError("need at least 3 shown numbers");
  const auto valid = ValidContinuations(shown);
  const bool hit =
      std::find(valid.begin(), valid.end(), proposed) != valid.end();
  return ShapedReward(hit ? high : low);
}

// ---------------------------------------------------------------- NumberLine

NumberLineEnv::NumberLineEnv(EnvConfig config) : Environment(std::move(config)) {
  if (config_.kind != EnvKind::kNumberLine) {
    throw ConfigError("env.kind: expected numberline");
  }
}

std::vector<std::string> NumberLineEnv::InputTokenUniverse() const {
  std::vector<std::string> out = {"goal:NL"};
  for (int c = config_.n_min; c <= config_.n_max; ++c) {
    out.push_back("goal:target=" + std::to_string(c));
    out.push_back("obs:target=" + std::to_string(c));
  }
  for (int y = config_.n_min - horizon_; y <= config_.n_max + horizon_; ++y) {
    out.push_back("obs:current=" + std::to_string(y));
  }
  return out;
}

int NumberLineEnv::NumTasks() const {
  const int n = config_.n_max - config_.n_min + 1;
  return n * (n - 1);
}

ResetResult NumberLineEnv::ResetToTask(int task) {
  const int n = config_.n_max - config_.n_min + 1;
  if (task < 0 || task >= NumTasks()) throw RangeError("task out of range");
  const int c = task / (n - 1);
  int s = task % (n - 1);
  if (s >= c) ++s;  // skip start == target
  return ResetTo(config_.n_min + c, config_.n_min + s);
}

ResetResult NumberLineEnv::ResetTo(std::int64_t target, std::int64_t start) {
  target_ = target;
  current_ = start;
  t_ = 0;
  done_ = !config_.done_action && current_ == target_;
  return {"NL target=" + std::to_string(target_), Observe(), Admissible()};
}

Observation NumberLineEnv::Observe() const {
  return Observation{{{"current", current_}, {"target", target_}}};
}

std::vector<Token> NumberLineEnv::Admissible() const {
  if (done_) return {};
  if (!config_.done_action) return {kPlus, kMinus};
  if (current_ == target_ || t_ >= horizon_ - 1) return {Token{0}};
  return {Token{0}, kPlus, kMinus};
}

EnvStep NumberLineEnv::Step(Token action) {
  RequireAdmissible(action);
  EnvStep out;
  if (action.id == 0) {
    done_ = true;
    ++t_;
    out.reward = ShapeNumberLine(target_, current_, config_.scaling).value();
  } else {
    current_ += action == kPlus ? 1 : -1;
    current_ = std::clamp<std::int64_t>(current_, config_.n_min - horizon_,
                                        config_.n_max + horizon_);
    ++t_;
    if (!config_.done_action && (current_ == target_ || t_ >= horizon_)) {
      done_ = true;
      out.reward = ShapeNumberLine(target_, current_, config_.scaling).value();
    }
  }
  out.done = done_;
  out.observation = Observe();
  out.admissible = Admissible();
  return out;
}

std::unique_ptr<Environment> NumberLineEnv::Clone() const {
  return std::make_unique<NumberLineEnv>(*this);
}

ShapedReward NumberLineEnv::PrefixReward(const Trajectory& prefix) const {
  const auto& obs = prefix.final_observation;
  return ShapeNumberLine(obs.Get("target"), obs.Get("current"),
                         config_.scaling);
}

bool NumberLineEnv::Success(const Trajectory& traj) const {
  const auto& obs = traj.final_observation;
  return traj.terminated && obs.Get("current") == obs.Get("target");
}

double NumberLineEnv::RawReturn(const Trajectory& traj) const {
  return Success(traj) ? 1.0 : 0.0;
}

// ----------------------------------------------------------------- Blackjack

BlackjackEnv::BlackjackEnv(EnvConfig config) : Environment(std::move(config)) {
  if (config_.kind != EnvKind::kBlackjack) {
    throw ConfigError("env.kind: expected blackjack");
  }
}

std::vector<std::string> BlackjackEnv::InputTokenUniverse() const {
  std::vector<std::string> out = {"goal:BJ", "goal:win"};
  for (int v = 2; v <= 31; ++v) out.push_back("obs:player=" + std::to_string(v));
  for (int v = 1; v <= 10; ++v) out.push_back("obs:dealer=" + std::to_string(v));
  for (int v = 0; v <= 1; ++v) {
    out.push_back("obs:usable_ace=" + std::to_string(v));
    out.push_back("obs:resolved=" + std::to_string(v));
  }
  for (int v = -1; v <= 1; ++v) out.push_back("obs:outcome=" + std::to_string(v));
  return out;
}

int BlackjackEnv::HandValue(int sum, bool has_ace) {
  return (has_ace && sum + 10 <= 21) ? sum + 10 : sum;
}

int BlackjackEnv::DrawCard() {
  const int rank = 1 + static_cast<int>(UniformIndex(rng_, 13));
  return std::min(rank, 10);
}

ResetResult BlackjackEnv::ResetToTask(int) {
  throw UnsupportedEnvironmentError("blackjack has no enumerable task set");
}

ResetResult BlackjackEnv::ResetWithSeed(std::uint64_t episode_seed) {
  rng_ = MakeRng({config_.seed, episode_seed, 0xb1ac});
  dealer_visible_ = DrawCard();
  const int hidden = DrawCard();
  dealer_sum_ = dealer_visible_ + hidden;
  dealer_ace_ = dealer_visible_ == 1 || hidden == 1;
  const int p1 = DrawCard();
  const int p2 = DrawCard();
  player_sum_ = p1 + p2;
  player_ace_ = p1 == 1 || p2 == 1;
  t_ = 0;
  resolved_ = false;
  outcome_ = 0;
  done_ = false;
  return {"BJ win", Observe(), Admissible()};
}

Observation BlackjackEnv::Observe() const {
  const bool usable = player_ace_ && player_sum_ + 10 <= 21;
  return Observation{{{"player", HandValue(player_sum_, player_ace_)},
                      {"dealer", dealer_visible_},
                      {"usable_ace", usable ? 1 : 0},
                      {"resolved", resolved_ ? 1 : 0},
                      {"outcome", resolved_ ? outcome_ : 0}}};
}

std::vector<Token> BlackjackEnv::Admissible() const {
  if (done_) return {};
  if (!config_.done_action) return {kStand, kHit};
  if (resolved_ || t_ >= horizon_ - 1) return {Token{0}};
  return {Token{0}, kStand, kHit};
}

void BlackjackEnv::Resolve(int outcome) {
  resolved_ = true;
  outcome_ = outcome;
}

void BlackjackEnv::PlayDealer() {
  while (HandValue(dealer_sum_, dealer_ace_) < 17) {
    const int c = DrawCard();
    dealer_sum_ += c;
    dealer_ace_ = dealer_ace_ || c == 1;
  }
  const int player = HandValue(player_sum_, player_ace_);
  const int dealer = HandValue(dealer_sum_, dealer_ace_);
  if (dealer > 21 || player > dealer) {
    Resolve(1);
  } else if (player == dealer) {
    Resolve(0);
  } else {
    Resolve(-1);
  }
}

EnvStep BlackjackEnv::Step(Token action) {
  RequireAdmissible(action);
  EnvStep out;
  ++t_;
  if (action.id == 0) {
    done_ = true;
    out.reward = resolved_ ? ShapeBlackjack(outcome_, config_.floor).value()
                           : config_.floor;
  } else if (action == kStand) {
    PlayDealer();
  } else {
    const int c = DrawCard();
    player_sum_ += c;
    player_ace_ = player_ace_ || c == 1;
    if (player_sum_ > 21) {
      Resolve(-1);
    } else if (!config_.done_action && t_ >= horizon_) {
      PlayDealer();
    }
  }
  if (!config_.done_action && resolved_) {
    done_ = true;
    out.reward = ShapeBlackjack(outcome_, config_.floor).value();
  }
  out.done = done_;
  out.observation = Observe();
  out.admissible = Admissible();
  return out;
}

std::unique_ptr<Environment> BlackjackEnv::Clone() const {
  return std::make_unique<BlackjackEnv>(*this);
}

ShapedReward BlackjackEnv::PrefixReward(const Trajectory& prefix) const {
  const auto& obs = prefix.final_observation;
  if (obs.Get("resolved") == 0) return ShapedReward(config_.floor);
  return ShapeBlackjack(static_cast<int>(obs.Get("outcome")), config_.floor);
}

bool BlackjackEnv::Success(const Trajectory& traj) const {
  return RawReturn(traj) == 1.0;
}

double BlackjackEnv::RawReturn(const Trajectory& traj) const {
  const auto& obs = traj.final_observation;
  if (!traj.terminated || obs.Get("resolved") == 0) return -1.0;
  return static_cast<double>(obs.Get("outcome"));
}

// ----------------------------------------------------------- SequencePattern

SequencePatternEnv::SequencePatternEnv(EnvConfig config)
    : Environment(std::move(config)) {
  if (config_.kind != EnvKind::kSequencePattern) {
    throw ConfigError("env.kind: expected sequence_pattern");
  }
  if (!config_.fixed_sequence.empty()) {
    tasks_.push_back(config_.fixed_sequence);
  } else {
    std::set<std::vector<std::int64_t>> uniq;
    for (std::int64_t a = 1; a <= 4; ++a) {
      for (std::int64_t k = 1; k <= 3; ++k) uniq.insert({a, a + k, a + 2 * k});
    }
    for (std::int64_t a = 1; a <= 3; ++a) {
      for (std::int64_t b = 1; b <= 3; ++b) uniq.insert({a, b, a + b});
    }
    tasks_.assign(uniq.begin(), uniq.end());
  }
  for (const auto& s : tasks_) {
    for (auto v : s) max_value_ = std::max(max_value_, v);
    for (auto v : CandidateSet(s)) max_value_ = std::max(max_value_, v);
  }
}

std::vector<std::string> SequencePatternEnv::ActionNames() const {
  std::vector<std::string> out;
  for (std::int64_t v = 0; v <= max_value_; ++v) out.push_back(std::to_string(v));
  return out;
}

std::vector<std::string> SequencePatternEnv::InputTokenUniverse() const {
  std::vector<std::string> out = {"goal:SP", "goal:next"};
  const std::size_t len = tasks_.front().size();
  for (std::size_t i = 0; i < len; ++i) {
    for (std::int64_t v = 0; v <= max_value_; ++v) {
      out.push_back("obs:s" + std::to_string(i) + "=" + std::to_string(v));
    }
  }
  for (std::int64_t v = 0; v <= max_value_; ++v) {
    out.push_back("obs:chosen=" + std::to_string(v));
  }
  out.push_back("obs:resolved=0");
  out.push_back("obs:resolved=1");
  return out;
}

Token SequencePatternEnv::TokenForValue(std::int64_t v) const {
  if (v < 0 || v > max_value_) throw RangeError("value outside action range");
  return Token{static_cast<int>(v) + 1};
}

std::int64_t SequencePatternEnv::ValueOf(Token t) const {
  if (t.id < 1 || t.id > max_value_ + 1) throw RangeError("not a number token");
  return t.id - 1;
}

ResetResult SequencePatternEnv::ResetToTask(int task) {
  if (task < 0 || task >= NumTasks()) throw RangeError("task out of range");
  shown_ = tasks_[task];
  chosen_ = 0;
  t_ = 0;
  resolved_ = false;
  done_ = false;
  return {"SP next", Observe(), Admissible()};
}

Observation SequencePatternEnv::Observe() const {
  Observation obs;
  for (std::size_t i = 0; i < shown_.size(); ++i) {
    obs.fields.emplace_back("s" + std::to_string(i), shown_[i]);
  }
  obs.fields.emplace_back("resolved", resolved_ ? 1 : 0);
  obs.fields.emplace_back("chosen", resolved_ ? chosen_ : 0);
  return obs;
}

std::vector<std::int64_t> SequencePatternEnv::ShownOf(const Observation& obs) {
  std::vector<std::int64_t> shown;
  for (const auto& [k, v] : obs.fields) {
    if (!k.empty() && k[0] == 's') shown.push_back(v);
  }
  return shown;
}

std::vector<Token> SequencePatternEnv::Admissible() const {
  if (done_) return {};
  if (config_.done_action && (resolved_ || t_ >= horizon_ - 1)) {
    return {Token{0}};
  }
  std::vector<Token> out;
  if (config_.done_action) out.push_back(Token{0});
  for (auto v : CandidateSet(shown_)) out.push_back(TokenForValue(v));
  return Sorted(std::move(out));
}

EnvStep SequencePatternEnv::Step(Token action) {
  RequireAdmissible(action);
  EnvStep out;
  ++t_;
  if (action.id == 0) {
    done_ = true;
    out.reward = resolved_ ? SequenceReward(shown_, chosen_,
                                            config_.high_reward,
                                            config_.floor)
                                 .value()
                           : config_.floor;
  } else {
    chosen_ = ValueOf(action);
    resolved_ = true;
    if (!config_.done_action) {
      done_ = true;
      out.reward =
          SequenceReward(shown_, chosen_, config_.high_reward, config_.floor)
              .value();
    }
  }
  out.done = done_;
  out.observation = Observe();
  out.admissible = Admissible();
  return out;
}

std::unique_ptr<Environment> SequencePatternEnv::Clone() const {
  return std::make_unique<SequencePatternEnv>(*this);
}

ShapedReward SequencePatternEnv::PrefixReward(const Trajectory& prefix) const {
  const auto& obs = prefix.final_observation;
  if (obs.Get("resolved") == 0) return ShapedReward(config_.floor);
  return SequenceReward(ShownOf(obs), obs.Get("chosen"), config_.high_reward,
                        config_.floor);
}

bool SequencePatternEnv::Success(const Trajectory& traj) const {
  const auto& obs = traj.final_observation;
  if (!traj.terminated || obs.Get("resolved") == 0) return false;
  const auto valid = ValidContinuations(ShownOf(obs));
  return std::find(valid.begin(), valid.end(), obs.Get("chosen")) !=
         valid.end();
}

double SequencePatternEnv::RawReturn(const Trajectory& traj) const {
  return Success(traj) ? 1.0 : 0.0;
}

}  // namespace gflowseq
