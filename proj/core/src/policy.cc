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

#include "gflowseq/policy.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gflowseq/error.h"
#include "json.hpp"

namespace gflowseq {
namespace {

using ad::Tensor;
using ad::Var;
using Json = nlohmann::ordered_json;

enum ParamIndex { kEmbed = 0, kWIn, kWRec, kBRec, kWOut, kBOut, kNumParams };

double Normal(Rng& rng) {
  // Box-Muller on the portable uniform draw.
  double u1 = UniformUnit(rng);
  while (u1 <= 0.0) u1 = UniformUnit(rng);
  const double u2 = UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Tensor RandomTensor(int rows, int cols, double stddev, Rng& rng) {
  Tensor t(rows, cols);
  for (double& x : t.data) x = stddev * Normal(rng);
  return t;
}

// Admissible-masked, tempered log-probabilities over `allowed`.
Var MaskedLogProbs(Var logits, const std::vector<Token>& allowed,
                   double temperature) {
  std::vector<int> ids;
  ids.reserve(allowed.size());
  for (Token t : allowed) ids.push_back(t.id);
  Var g = ad::Gather(logits, ids);
  if (temperature != 1.0) g = ad::Scale(g, 1.0 / temperature);
  return ad::LogSoftmax(g);
}

int PositionOf(const std::vector<Token>& set, Token t) {
  auto it = std::find(set.begin(), set.end(), t);
  return it == set.end() ? -1 : static_cast<int>(it - set.begin());
}

std::vector<Token> CotTokens(const Vocabulary& vocab) {
  std::vector<Token> out;
  for (int j = 0; j < vocab.num_cot(); ++j) out.push_back(vocab.cot(j));
  return out;
}

// Termination log-probability read off an action distribution.
Var DoneEntry(ad::Tape& tape, Var log_probs,
              const std::vector<Token>& admissible, bool* admissible_out) {
  const int pos = PositionOf(admissible, Token{0});
  *admissible_out = pos >= 0;
  return pos >= 0 ? ad::Pick(log_probs, pos) : tape.Constant(kDoneLogFloor);
}

std::vector<std::string> SplitWords(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

void PolicyConfig::Validate() const {
  if (embedding_dim < 1) throw ConfigError("policy.embedding_dim: must be >= 1");
  if (hidden_dim < 1) throw ConfigError("policy.hidden_dim: must be >= 1");
  if (cot_length < 0) throw ConfigError("policy.cot_length: must be >= 0");
  if (cot_length > 0 && cot_vocab < 1) {
    throw ConfigError("policy.cot_vocab: must be >= 1 when cot_length > 0");
  }
  if (cot_vocab < 0) throw ConfigError("policy.cot_vocab: must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("policy.lambda: must lie in [0, 1]");
  }
  if (!(temperature > 0.0)) throw ConfigError("policy.temperature: must be > 0");
  if (!(init_scale >= 0.0)) throw ConfigError("policy.init_scale: must be >= 0");
}

std::size_t PolicyParameters::NumScalars() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

bool PolicyParameters::SameShapes(const PolicyParameters& other) const {
  if (tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (!tensors[i].SameShape(other.tensors[i])) return false;
  }
  return true;
}

bool PolicyParameters::AllFinite() const {
  for (const auto& t : tensors) {
    for (double x : t.data) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

PolicyParameters PolicyParameters::ZerosLike() const {
  PolicyParameters out;
  out.names = names;
  for (const auto& t : tensors) out.tensors.emplace_back(t.rows, t.cols);
  return out;
}

void SaveParameters(const std::string& bin_path, const std::string& json_path,
                    const PolicyParameters& params,
                    const std::string& meta_json) {
  Json manifest;
  manifest["format"] = "gflowseq-tensors-v1";
  manifest["dtype"] = "float64-le";
  Json tensors = Json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const auto& t = params.tensors[i];
    tensors.push_back({{"name", params.names[i]},
                       {"shape", {t.rows, t.cols}},
                       {"offset", offset}});
    offset += t.size();
  }
  manifest["tensors"] = std::move(tensors);
  manifest["meta"] = Json::parse(meta_json);

  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot write " + bin_path);
  for (const auto& t : params.tensors) {
    for (double x : t.data) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>(bits >> (8 * b));
      bin.write(bytes, 8);
    }
  }
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw IoError("cannot write " + json_path);
  js << manifest.dump(2) << '\n';
}

PolicyParameters LoadParameters(const std::string& bin_path,
                                const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path);
  Json manifest;
  try {
    manifest = Json::parse(js);
  } catch (const Json::exception& e) {
    throw DataCorruptionError("bad manifest " + json_path + ": " + e.what());
  }
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + bin_path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(bin)),
                          std::istreambuf_iterator<char>());
  PolicyParameters params;
  std::size_t pos = 0;
  try {
    for (const auto& jt : manifest.at("tensors")) {
      const int rows = jt.at("shape").at(0).get<int>();
      const int cols = jt.at("shape").at(1).get<int>();
      Tensor t(rows, cols);
      for (double& x : t.data) {
        if (pos + 8 > bytes.size()) {
          throw DataCorruptionError("tensor file " + bin_path + " truncated");
        }
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
          bits |= static_cast<std::uint64_t>(
                      static_cast<unsigned char>(bytes[pos + b]))
                  << (8 * b);
        }
        x = std::bit_cast<double>(bits);
        pos += 8;
      }
      params.names.push_back(jt.at("name").get<std::string>());
      params.tensors.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    throw DataCorruptionError("bad manifest " + json_path + ": " + e.what());
  }
  if (pos != bytes.size()) {
    throw DataCorruptionError("tensor file " + bin_path +
                              " has trailing bytes");
  }
  return params;
}

std::string LoadParametersMeta(const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path);
  try {
    const Json manifest = Json::parse(js);
    return manifest.contains("meta") ? manifest["meta"].dump() : "{}";
  } catch (const Json::exception& e) {
    throw DataCorruptionError("bad manifest " + json_path + ": " + e.what());
  }
}

Var TrajectoryScore::LogPDone(std::size_t i) const {
  if (i > steps.size()) throw RangeError("prefix index out of range");
  return i < steps.size() ? steps[i].log_p_done : final_log_p_done;
}

bool TrajectoryScore::DoneAdmissible(std::size_t i) const {
  if (i > steps.size()) throw RangeError("prefix index out of range");
  return i < steps.size() ? steps[i].done_admissible : final_done_admissible;
}

std::vector<Var> Policy::Bind(ad::Tape& tape) const {
  std::vector<Var> out;
  for (const auto& t : parameters().tensors) out.push_back(tape.Leaf(t));
  return out;
}

Var LogPForwardOf(const Policy& policy, ad::Tape& tape,
                  std::span<const Var> params, const Trajectory& traj,
                  std::size_t t) {
  if (t >= traj.steps.size()) {
    throw RangeError("step " + std::to_string(t) + " not in trajectory");
  }
  return policy.Score(tape, params, TrajectoryPrefix(traj, t + 1))
      .steps[t]
      .log_p_forward;
}

std::pair<Var, bool> TerminalLogProb(const Policy& policy, ad::Tape& tape,
                                     std::span<const Var> params,
                                     const Trajectory& prefix) {
  auto score = policy.Score(tape, params, prefix);
  return {score.final_log_p_done, score.final_done_admissible};
}

// ------------------------------------------------------------ RecurrentPolicy

struct RecurrentPolicy::Frames {
  const RecurrentPolicy& policy;
  ad::Tape& tape;
  std::span<const Var> w;

  // One recurrent update; an invalid `h` is the zero state.
  Var Step(Var h, const std::vector<int>& ids) const {
    Var e = ad::SumRows(ad::GatherRows(w[kEmbed], ids));
    Var pre = ad::MatMul(e, w[kWIn]);
    if (h.valid()) pre = ad::Add(pre, ad::MatMul(h, w[kWRec]));
    return ad::Tanh(ad::Add(pre, w[kBRec]));
  }

  Var Logits(Var h) const {
    if (!h.valid()) h = tape.Constant(Tensor(1, policy.config_.hidden_dim));
    return ad::Add(ad::MatMul(h, w[kWOut]), w[kBOut]);
  }

  std::vector<int> GoalIds(const std::string& goal) const {
    std::vector<int> ids;
    for (const auto& word : SplitWords(goal)) {
      ids.push_back(policy.InputId("goal:" + word));
    }
    if (ids.empty()) ids.push_back(0);
    return ids;
  }

  std::vector<int> ObsIds(const Observation& obs, std::size_t t) const {
    std::vector<int> ids;
    for (const auto& [k, v] : obs.fields) {
      ids.push_back(policy.InputId("obs:" + k + "=" + std::to_string(v)));
    }
    // The step index is history, not observation.
    if (!policy.config_.markovian) {
      ids.push_back(policy.InputId("step=" + std::to_string(t)));
    }
    return ids;
  }

  std::vector<int> TokenIds(const char* prefix, Token tok) const {
    return {policy.InputId(prefix + policy.vocab_.Name(tok))};
  }

  // Begins a state: restarts in Markovian mode, then reads the observation.
  Var EnterState(Var h, const Observation& obs, std::size_t t) const {
    if (policy.config_.markovian) h = Var();
    return Step(h, ObsIds(obs, t));
  }

  Var Start(const std::string& goal) const {
    return policy.config_.markovian ? Var() : Step(Var(), GoalIds(goal));
  }

  // Samples CoT then the action from state `h`; advances `h` past the CoT.
  PolicyOutput Sample(Var& h, const std::vector<Token>& admissible,
                      Rng& rng) const {
    if (admissible.empty()) throw ContractError("empty admissible set");
    const auto& cfg = policy.config_;
    PolicyOutput out;
    const auto cot_tokens = CotTokens(policy.vocab_);
    for (int j = 0; j < cfg.cot_length; ++j) {
      Var lp = MaskedLogProbs(Logits(h), cot_tokens, cfg.temperature);
      const int k = SampleFromLogProbs(lp.value().data, rng);
      out.cot.push_back(cot_tokens[k]);
      out.log_p_cot += lp.value().data[k];
      h = Step(h, TokenIds("cot:", cot_tokens[k]));
    }
    Var lp = MaskedLogProbs(Logits(h), admissible, cfg.temperature);
    const int k = SampleFromLogProbs(lp.value().data, rng);
    out.action = admissible[k];
    out.log_p_action = lp.value().data[k];
    out.log_p_forward = out.log_p_action + cfg.lambda * out.log_p_cot;
    return out;
  }
};

class RecurrentSession : public PolicySession {
 public:
  RecurrentSession(const RecurrentPolicy& policy, const std::string& goal)
      : policy_(policy),
        params_(policy.Bind(tape_)),
        frames_{policy, tape_, params_},
        h_(frames_.Start(goal)) {}

  PolicyOutput Act(const Observation& obs, const std::vector<Token>& admissible,
                   Rng& rng) override {
    h_ = frames_.EnterState(h_, obs, t_);
    PolicyOutput out = frames_.Sample(h_, admissible, rng);
    h_ = frames_.Step(h_, frames_.TokenIds("act:", out.action));
    ++t_;
    return out;
  }

 private:
  const RecurrentPolicy& policy_;
  ad::Tape tape_;
  std::vector<Var> params_;
  RecurrentPolicy::Frames frames_;
  Var h_;
  std::size_t t_ = 0;
};

RecurrentPolicy::RecurrentPolicy(PolicyConfig config, Vocabulary vocab,
                                 std::vector<std::string> input_tokens,
                                 int horizon, std::uint64_t init_seed)
    : config_(config), vocab_(std::move(vocab)), horizon_(horizon) {
  config_.Validate();
  if (config_.cot_length > 0 && vocab_.num_cot() == 0) {
    throw ConfigError("policy.cot_vocab: vocabulary has no CoT tokens");
  }
  input_names_.push_back("<unk>");
  for (auto& t : input_tokens) input_names_.push_back(std::move(t));
  for (int t = 0; t <= horizon_; ++t) {
    input_names_.push_back("step=" + std::to_string(t));
  }
  for (const auto& name : vocab_.names()) {
    input_names_.push_back((vocab_.IsCot(vocab_.Find(name)) ? "cot:" : "act:") +
                           name);
  }
  for (int i = 0; i < static_cast<int>(input_names_.size()); ++i) {
    input_index_.emplace(input_names_[i], i);
  }

  Rng rng = MakeRng({init_seed, 0x5eed});
  const int e = config_.embedding_dim;
  const int h = config_.hidden_dim;
  const int vin = static_cast<int>(input_names_.size());
  const int vout = vocab_.size();
  params_.names = {"embed", "w_in", "w_rec", "b_rec", "w_out", "b_out"};
  params_.tensors = {
      RandomTensor(vin, e, 1.0, rng),
      RandomTensor(e, h, 1.0 / std::sqrt(static_cast<double>(e)), rng),
      RandomTensor(h, h, 0.5 / std::sqrt(static_cast<double>(h)), rng),
      Tensor(1, h),
      RandomTensor(h, vout,
                   config_.init_scale / std::sqrt(static_cast<double>(h)), rng),
      Tensor(1, vout),
  };
}

std::unique_ptr<Policy> RecurrentPolicy::Clone() const {
  return std::make_unique<RecurrentPolicy>(*this);
}

void RecurrentPolicy::SetTemperature(double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("temperature must be > 0");
  config_.temperature = alpha;
}

int RecurrentPolicy::InputId(const std::string& token) const {
  auto it = input_index_.find(token);
  return it == input_index_.end() ? 0 : it->second;
}

TrajectoryScore RecurrentPolicy::Score(ad::Tape& tape,
                                       std::span<const Var> params,
                                       const Trajectory& traj) const {
  if (params.size() != kNumParams) throw ContractError("wrong parameter count");
  Frames f{*this, tape, params};
  TrajectoryScore score;
  const auto cot_tokens = CotTokens(vocab_);
  Var h = f.Start(traj.goal);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const StepRecord& s = traj.steps[t];
    h = f.EnterState(h, s.observation, t);
    StepScore ss;
    Var lp_cot;
    for (Token c : s.cot) {
      const int pos = PositionOf(cot_tokens, c);
      if (pos < 0) throw DataCorruptionError("recorded CoT token is not CoT");
      Var lp = MaskedLogProbs(f.Logits(h), cot_tokens, config_.temperature);
      Var pick = ad::Pick(lp, pos);
      lp_cot = lp_cot.valid() ? ad::Add(lp_cot, pick) : pick;
      h = f.Step(h, f.TokenIds("cot:", c));
    }
    ss.log_p_cot = lp_cot.valid() ? lp_cot : tape.Constant(0.0);
    const int pos = PositionOf(s.admissible, s.action);
    if (pos < 0) {
      throw DataCorruptionError("recorded action '" + vocab_.Name(s.action) +
                                "' not in its admissible set at step " +
                                std::to_string(t));
    }
    Var lp = MaskedLogProbs(f.Logits(h), s.admissible, config_.temperature);
    ss.log_p_action = ad::Pick(lp, pos);
    ss.log_p_done = DoneEntry(tape, lp, s.admissible, &ss.done_admissible);
    ss.log_p_forward =
        ad::Add(ss.log_p_action, ad::Scale(ss.log_p_cot, config_.lambda));
    score.steps.push_back(ss);
    h = f.Step(h, f.TokenIds("act:", s.action));
  }
  const auto& fin = traj.final_admissible;
  if (PositionOf(fin, Token{0}) >= 0) {
    h = f.EnterState(h, traj.final_observation, traj.steps.size());
    Var lp = MaskedLogProbs(f.Logits(h), fin, config_.temperature);
    score.final_log_p_done =
        DoneEntry(tape, lp, fin, &score.final_done_admissible);
  } else {
    score.final_log_p_done = tape.Constant(kDoneLogFloor);
    score.final_done_admissible = false;
  }
  return score;
}

std::unique_ptr<PolicySession> RecurrentPolicy::Begin(
    const std::string& goal) const {
  return std::make_unique<RecurrentSession>(*this, goal);
}

std::vector<double> RecurrentPolicy::EncodeHistory(
    const Trajectory& prefix) const {
  ad::Tape tape;
  auto params = Bind(tape);
  Frames f{*this, tape, params};
  Var h = f.Start(prefix.goal);
  for (std::size_t t = 0; t < prefix.steps.size(); ++t) {
    const StepRecord& s = prefix.steps[t];
    h = f.EnterState(h, s.observation, t);
    for (Token c : s.cot) h = f.Step(h, f.TokenIds("cot:", c));
    h = f.Step(h, f.TokenIds("act:", s.action));
  }
  h = f.EnterState(h, prefix.final_observation, prefix.steps.size());
  return h.value().data;
}

PolicyOutput RecurrentPolicy::SampleFrom(const std::vector<double>& hidden,
                                         const std::vector<Token>& admissible,
                                         Rng& rng) const {
  if (static_cast<int>(hidden.size()) != config_.hidden_dim) {
    throw ShapeError("hidden state has wrong size");
  }
  ad::Tape tape;
  auto params = Bind(tape);
  Frames f{*this, tape, params};
  Var h = tape.Constant(Tensor::Row(hidden));
  return f.Sample(h, admissible, rng);
}

// -------------------------------------------------------------- TabularPolicy

class TabularSession : public PolicySession {
 public:
  TabularSession(const TabularPolicy& policy, const std::string& goal)
      : policy_(policy) {
    history_.goal = goal;
  }

  PolicyOutput Act(const Observation& obs, const std::vector<Token>& admissible,
                   Rng& rng) override {
    if (admissible.empty()) throw ContractError("empty admissible set");
    history_.final_observation = obs;
    history_.final_admissible = admissible;
    const int row =
        policy_.RowOf(CanonicalHistoryText(history_, policy_.vocabulary()));
    ad::Tape tape;
    Var table = tape.Constant(policy_.params_.tensors[0]);
    const int rows[1] = {row};
    Var lp = MaskedLogProbs(ad::GatherRows(table, rows), admissible,
                            policy_.config_.temperature);
    const int k = SampleFromLogProbs(lp.value().data, rng);
    PolicyOutput out;
    out.action = admissible[k];
    out.log_p_action = lp.value().data[k];
    out.log_p_forward = out.log_p_action + policy_.config_.lambda * 0.0;
    history_.steps.push_back(StepRecord{obs, admissible, {}, out.action, 0.0});
    return out;
  }

 private:
  const TabularPolicy& policy_;
  Trajectory history_;
};

TabularPolicy::TabularPolicy(PolicyConfig config, Vocabulary vocab,
                             std::vector<std::string> keys)
    : config_(config), vocab_(std::move(vocab)) {
  config_.Validate();
  if (config_.cot_length != 0) {
    throw ConfigError("policy.cot_length: tabular policy requires 0");
  }
  for (auto& k : keys) {
    if (!rows_.emplace(std::move(k), static_cast<int>(rows_.size())).second) {
      throw ConfigError("duplicate tabular key");
    }
  }
  params_.names = {"logits"};
  params_.tensors = {Tensor(static_cast<int>(rows_.size()), vocab_.size())};
}

std::unique_ptr<Policy> TabularPolicy::Clone() const {
  return std::make_unique<TabularPolicy>(*this);
}

void TabularPolicy::SetTemperature(double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("temperature must be > 0");
  config_.temperature = alpha;
}

int TabularPolicy::RowOf(const std::string& key) const {
  auto it = rows_.find(key);
  if (it == rows_.end()) throw RangeError("tabular policy has no row for key");
  return it->second;
}

void TabularPolicy::SetLogits(const std::string& key,
                              const std::vector<double>& logits) {
  if (static_cast<int>(logits.size()) != vocab_.size()) {
    throw ShapeError("logit row must cover the vocabulary");
  }
  const int row = RowOf(key);
  auto& t = params_.tensors[0];
  std::copy(logits.begin(), logits.end(),
            t.data.begin() + static_cast<std::ptrdiff_t>(row) * t.cols);
}

TrajectoryScore TabularPolicy::Score(ad::Tape& tape,
                                     std::span<const Var> params,
                                     const Trajectory& traj) const {
  if (params.size() != 1) throw ContractError("wrong parameter count");
  TrajectoryScore score;
  auto row_logits = [&](std::size_t i) {
    const int rows[1] = {
        RowOf(CanonicalHistoryText(TrajectoryPrefix(traj, i), vocab_))};
    return ad::GatherRows(params[0], rows);
  };
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const StepRecord& s = traj.steps[t];
    if (!s.cot.empty()) throw DataCorruptionError("tabular policy has no CoT");
    const int pos = PositionOf(s.admissible, s.action);
    if (pos < 0) {
      throw DataCorruptionError("recorded action not in its admissible set");
    }
    Var lp = MaskedLogProbs(row_logits(t), s.admissible, config_.temperature);
    StepScore ss;
    ss.log_p_action = ad::Pick(lp, pos);
    ss.log_p_cot = tape.Constant(0.0);
    ss.log_p_done = DoneEntry(tape, lp, s.admissible, &ss.done_admissible);
    ss.log_p_forward =
        ad::Add(ss.log_p_action, ad::Scale(ss.log_p_cot, config_.lambda));
    score.steps.push_back(ss);
  }
  const auto& fin = traj.final_admissible;
  if (PositionOf(fin, Token{0}) >= 0) {
    Var lp = MaskedLogProbs(row_logits(traj.steps.size()), fin,
                            config_.temperature);
    score.final_log_p_done =
        DoneEntry(tape, lp, fin, &score.final_done_admissible);
  } else {
    score.final_log_p_done = tape.Constant(kDoneLogFloor);
  }
  return score;
}

std::unique_ptr<PolicySession> TabularPolicy::Begin(
    const std::string& goal) const {
  return std::make_unique<TabularSession>(*this, goal);
}

}  // namespace gflowseq
