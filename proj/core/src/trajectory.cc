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

#include "gflowseq/trajectory.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gflowseq/error.h"
#include "json.hpp"

namespace gflowseq {
namespace {

using Json = nlohmann::ordered_json;

// Escapes characters that act as separators in the canonical text so that
// the encoding stays injective for arbitrary goal and key strings.
std::string Escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case ' ': out += "\\s"; break;
      case '=': out += "\\e"; break;
      case '|': out += "\\p"; break;
      default: out += c;
    }
  }
  return out;
}

// Goals sit alone on their line, so only line breaks need escaping.
std::string EscapeLine(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

std::string TokenList(const std::vector<Token>& tokens,
                      const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += Escape(vocab.Name(tokens[i]));
  }
  return out;
}

Json ObservationToJson(const Observation& obs) {
  Json j = Json::object();
  for (const auto& [k, v] : obs.fields) j[k] = v;
  return j;
}

Observation ObservationFromJson(const Json& j) {
  if (!j.is_object()) throw DataCorruptionError("observation must be object");
  Observation obs;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number_integer()) {
      throw DataCorruptionError("observation field '" + k +
                                "' must be an integer");
    }
    obs.fields.emplace_back(k, v.get<std::int64_t>());
  }
  return obs;
}

Json TokensToJson(const std::vector<Token>& tokens, const Vocabulary& vocab) {
  Json j = Json::array();
  for (Token t : tokens) j.push_back(vocab.Name(t));
  return j;
}

std::vector<Token> TokensFromJson(const Json& j, const Vocabulary& vocab) {
  if (!j.is_array()) throw DataCorruptionError("token list must be array");
  std::vector<Token> out;
  for (const auto& e : j) out.push_back(vocab.Find(e.get<std::string>()));
  return out;
}

const Json& Field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw DataCorruptionError(std::string("missing field '") + name + "'");
  }
  return *it;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> action_names, int cot_size)
    : num_actions_(static_cast<int>(action_names.size())),
      num_cot_(cot_size) {
  if (cot_size < 0) throw ConfigError("cot vocabulary size must be >= 0");
  names_.emplace_back(kDoneName);
  for (auto& n : action_names) names_.push_back(std::move(n));
  for (int j = 0; j < cot_size; ++j) {
    names_.push_back("<c" + std::to_string(j) + ">");
  }
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw ConfigError("duplicate token name '" + names_[i] + "'");
    }
  }
}

Token Vocabulary::action(int i) const {
  if (i < 0 || i >= num_actions_) throw RangeError("action index out of range");
  return Token{1 + i};
}

Token Vocabulary::cot(int j) const {
  if (j < 0 || j >= num_cot_) throw RangeError("cot index out of range");
  return Token{1 + num_actions_ + j};
}

const std::string& Vocabulary::Name(Token t) const {
  if (!Contains(t)) {
    throw RangeError("token id " + std::to_string(t.id) +
                     " outside vocabulary of size " + std::to_string(size()));
  }
  return names_[t.id];
}

Token Vocabulary::Find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw DataCorruptionError("unknown token '" + std::string(name) + "'");
  }
  return Token{it->second};
}

std::int64_t Observation::Get(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  throw RangeError("observation has no field '" + std::string(key) + "'");
}

bool Observation::Has(std::string_view key) const {
  for (const auto& f : fields) {
    if (f.first == key) return true;
  }
  return false;
}

std::string Observation::Text() const {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ' ';
    out += Escape(fields[i].first);
    out += '=';
    out += std::to_string(fields[i].second);
  }
  return out;
}

const Observation& Trajectory::ObservationAt(std::size_t i) const {
  if (i > steps.size()) throw RangeError("prefix index out of range");
  return i < steps.size() ? steps[i].observation : final_observation;
}

const std::vector<Token>& Trajectory::AdmissibleAt(std::size_t i) const {
  if (i > steps.size()) throw RangeError("prefix index out of range");
  return i < steps.size() ? steps[i].admissible : final_admissible;
}

bool Trajectory::EndsWithDone(const Vocabulary& vocab) const {
  return !steps.empty() && vocab.IsDone(steps.back().action);
}

std::size_t Trajectory::NumStates(const Vocabulary& vocab) const {
  return EndsWithDone(vocab) ? steps.size() - 1 : steps.size();
}

ShapedReward::ShapedReward(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ShapingError("shaped reward must be strictly positive, got " +
                       FormatDouble(value));
  }
}

Trajectory TrajectoryPrefix(const Trajectory& traj, std::size_t i) {
  if (i > traj.steps.size()) {
    throw RangeError("prefix index " + std::to_string(i) +
                     " exceeds trajectory length " +
                     std::to_string(traj.steps.size()));
  }
  if (i == traj.steps.size()) return traj;
  Trajectory out;
  out.goal = traj.goal;
  out.steps.assign(traj.steps.begin(), traj.steps.begin() + i);
  out.terminated = false;
  out.terminal_reward = 0.0;
  out.final_observation = traj.steps[i].observation;
  out.final_admissible = traj.steps[i].admissible;
  return out;
}

std::string CanonicalHistoryText(const Trajectory& traj,
                                 const Vocabulary& vocab) {
  std::string out = "Goal: " + EscapeLine(traj.goal) + "\n";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& s = traj.steps[t];
    const std::string idx = std::to_string(t);
    out += "State " + idx + ": " + s.observation.Text() + "\n";
    out += "CoT " + idx + ": " + TokenList(s.cot, vocab) + "\n";
    out += "Action " + idx + ": " + Escape(vocab.Name(s.action)) + "\n";
  }
  out += "State " + std::to_string(traj.steps.size()) + ": " +
         traj.final_observation.Text() + "\n";
  out += "Admissible: " + TokenList(traj.final_admissible, vocab) + "\n";
  if (traj.terminated) out += "Terminated\n";
  return out;
}

std::string TrajectoryKey(const Trajectory& traj, const Vocabulary& vocab) {
  std::string out = Escape(traj.goal);
  out += " | ";
  out += traj.steps.empty() ? traj.final_observation.Text()
                            : traj.steps.front().observation.Text();
  out += " |";
  for (const auto& s : traj.steps) {
    out += ' ';
    out += Escape(vocab.Name(s.action));
  }
  return out;
}

std::string ToJsonLine(const Trajectory& traj, const Vocabulary& vocab) {
  Json j;
  j["goal"] = traj.goal;
  Json steps = Json::array();
  for (const auto& s : traj.steps) {
    Json js;
    js["observation"] = ObservationToJson(s.observation);
    js["admissible"] = TokensToJson(s.admissible, vocab);
    js["cot"] = TokensToJson(s.cot, vocab);
    js["action"] = vocab.Name(s.action);
    js["reward"] = s.reward;
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  j["terminated"] = traj.terminated;
  j["terminal_reward"] = traj.terminal_reward;
  j["final_observation"] = ObservationToJson(traj.final_observation);
  j["final_admissible"] = TokensToJson(traj.final_admissible, vocab);
  return j.dump();
}

Trajectory FromJsonLine(std::string_view line, const Vocabulary& vocab) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw DataCorruptionError(std::string("malformed trajectory line: ") +
                              e.what());
  }
  Trajectory traj;
  try {
    traj.goal = Field(j, "goal").get<std::string>();
    for (const auto& js : Field(j, "steps")) {
      StepRecord s;
      s.observation = ObservationFromJson(Field(js, "observation"));
      s.admissible = TokensFromJson(Field(js, "admissible"), vocab);
      s.cot = TokensFromJson(Field(js, "cot"), vocab);
      s.action = vocab.Find(Field(js, "action").get<std::string>());
      s.reward = Field(js, "reward").get<double>();
      traj.steps.push_back(std::move(s));
    }
    traj.terminated = Field(j, "terminated").get<bool>();
    traj.terminal_reward = Field(j, "terminal_reward").get<double>();
    traj.final_observation =
        ObservationFromJson(Field(j, "final_observation"));
    traj.final_admissible =
        TokensFromJson(Field(j, "final_admissible"), vocab);
  } catch (const Json::exception& e) {
    throw DataCorruptionError(std::string("bad trajectory field: ") +
                              e.what());
  }
  return traj;
}

std::vector<Trajectory> ReadJsonLines(const std::string& path,
                                      const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(FromJsonLine(line, vocab));
  }
  return out;
}

void WriteJsonLines(const std::string& path,
                    const std::vector<Trajectory>& trajs,
                    const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& t : trajs) out << ToJsonLine(t, vocab) << '\n';
}

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace gflowseq
