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

#include "gflowseq/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "gflowseq/error.h"
#include "json.hpp"

namespace gflowseq {
namespace {

using Json = nlohmann::ordered_json;

class Section {
 public:
  Section(const Json& json, std::string path)
      : json_(json), path_(std::move(path)) {
    if (!json_.is_object()) throw ConfigError(Where() + "expected an object");
  }

  template <typename T>
  void Read(const char* key, T& out) {
    seen_.insert(key);
    auto it = json_.find(key);
    if (it == json_.end()) return;
    const std::string field = Field(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(field + ": expected a boolean");
      out = it->template get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) {
        throw ConfigError(field + ": expected an integer");
      }
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_unsigned() || it->template get<std::int64_t>() >= 0) {
          out = it->template get<T>();
        } else {
          throw ConfigError(field + ": must be non-negative");
        }
      } else {
        out = it->template get<T>();
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(field + ": expected a number");
      out = it->template get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(field + ": expected a string");
      out = it->template get<std::string>();
    } else {
      if (!it->is_array()) throw ConfigError(field + ": expected an array");
      out.clear();
      for (const auto& v : *it) {
        if (!v.is_number_integer()) {
          throw ConfigError(field + ": expected integers");
        }
        out.push_back(v.template get<typename T::value_type>());
      }
    }
  }

  const Json* Child(const char* key) {
    seen_.insert(key);
    auto it = json_.find(key);
    return it == json_.end() ? nullptr : &*it;
  }

  std::string Field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void RejectUnknown() const {
    for (const auto& [k, v] : json_.items()) {
      if (!seen_.count(k)) throw ConfigError(Field(k) + ": unknown key");
    }
  }

 private:
  std::string Where() const { return path_.empty() ? "" : path_ + ": "; }

  const Json& json_;
  std::string path_;
  std::set<std::string> seen_;
};

void ParseEnv(const Json& j, EnvConfig& c) {
  Section s(j, "env");
  std::string kind(EnvKindName(c.kind));
  s.Read("kind", kind);
  try {
    c.kind = ParseEnvKind(kind);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("env.kind: ") + e.what());
  }
  s.Read("n_min", c.n_min);
  s.Read("n_max", c.n_max);
  s.Read("horizon", c.horizon);
  s.Read("scaling", c.scaling);
  s.Read("floor", c.floor);
  s.Read("seed", c.seed);
  s.Read("done_action", c.done_action);
  s.Read("high_reward", c.high_reward);
  s.Read("fixed_sequence", c.fixed_sequence);
  s.RejectUnknown();
}

void ParsePolicy(const Json& j, PolicyConfig& c) {
  Section s(j, "policy");
  s.Read("embedding_dim", c.embedding_dim);
  s.Read("hidden_dim", c.hidden_dim);
  s.Read("cot_length", c.cot_length);
  s.Read("cot_vocab", c.cot_vocab);
  s.Read("lambda", c.lambda);
  s.Read("temperature", c.temperature);
  s.Read("markovian", c.markovian);
  s.Read("init_scale", c.init_scale);
  s.RejectUnknown();
}

void ParseTrainer(const Json& j, TrainerConfig& c) {
  Section s(j, "trainer");
  std::string algorithm(AlgorithmName(c.algorithm));
  std::string loss(LossKindName(c.loss));
  s.Read("algorithm", algorithm);
  s.Read("loss", loss);
  try {
    c.algorithm = ParseAlgorithm(algorithm);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("trainer.algorithm: ") + e.what());
  }
  try {
    c.loss = ParseLossKind(loss);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("trainer.loss: ") + e.what());
  }
  s.Read("tasks", c.tasks);
  s.Read("trajectories_per_task", c.trajectories_per_task);
  s.Read("buffer_capacity", c.buffer_capacity);
  s.Read("off_policy", c.off_policy);
  s.Read("sft_init", c.sft_init);
  s.Read("lr_initial", c.lr_initial);
  s.Read("lr_peak", c.lr_peak);
  s.Read("lr_final", c.lr_final);
  s.Read("lr_peak_step", c.lr_peak_step);
  s.Read("total_steps", c.total_steps);
  s.Read("rollout_temperature", c.rollout_temperature);
  s.Read("baseline_decay", c.baseline_decay);
  s.Read("max_loss", c.max_loss);
  s.Read("workers", c.workers);
  s.RejectUnknown();
}

void ParseSft(const Json& j, SftConfig& c) {
  Section s(j, "sft");
  s.Read("episodes", c.episodes);
  s.Read("epochs", c.epochs);
  s.Read("batch_size", c.batch_size);
  s.Read("lr", c.lr);
  s.RejectUnknown();
}

void ParseEval(const Json& j, EvalConfig& c) {
  Section s(j, "eval");
  s.Read("samples", c.samples);
  s.Read("div_n", c.div_n);
  s.Read("div_tasks", c.div_tasks);
  s.Read("temperature", c.temperature);
  s.RejectUnknown();
}

}  // namespace

void EvalConfig::Validate() const {
  if (samples < 1) throw ConfigError("eval.samples: must be >= 1");
  if (div_n < 1) throw ConfigError("eval.div_n: must be >= 1");
  if (div_tasks < 1) throw ConfigError("eval.div_tasks: must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("eval.temperature: must be > 0");
}

void RunConfig::Validate() const {
  env.Validate();
  policy.Validate();
  trainer.Validate();
  sft.Validate();
  eval.Validate();
  if (output_dir.empty()) throw ConfigError("output_dir: must be non-empty");
  if (trainer.algorithm == Algorithm::kGFlowNet &&
      trainer.loss != LossKind::kVarTB && !env.done_action) {
    throw ConfigError("env.done_action: must be true for subtb/db");
  }
  if (trainer.off_policy && env.kind == EnvKind::kSequencePattern) {
    throw ConfigError("trainer.off_policy: sequence_pattern has no oracle");
  }
  if (trainer.sft_init && env.kind == EnvKind::kSequencePattern) {
    throw ConfigError("trainer.sft_init: sequence_pattern has no oracle");
  }
}

RunConfig ParseRunConfig(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  Section s(root, "");
  s.Read("seed", c.seed);
  s.Read("output_dir", c.output_dir);
  if (const Json* j = s.Child("env")) ParseEnv(*j, c.env);
  if (const Json* j = s.Child("policy")) ParsePolicy(*j, c.policy);
  if (const Json* j = s.Child("trainer")) ParseTrainer(*j, c.trainer);
  if (const Json* j = s.Child("sft")) ParseSft(*j, c.sft);
  if (const Json* j = s.Child("eval")) ParseEval(*j, c.eval);
  s.RejectUnknown();
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str());
}

std::string RunConfigToJson(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["env"] = {{"kind", EnvKindName(c.env.kind)},
              {"n_min", c.env.n_min},
              {"n_max", c.env.n_max},
              {"horizon", c.env.horizon},
              {"scaling", c.env.scaling},
              {"floor", c.env.floor},
              {"seed", c.env.seed},
              {"done_action", c.env.done_action},
              {"high_reward", c.env.high_reward},
              {"fixed_sequence", c.env.fixed_sequence}};
  j["policy"] = {{"embedding_dim", c.policy.embedding_dim},
                 {"hidden_dim", c.policy.hidden_dim},
                 {"cot_length", c.policy.cot_length},
                 {"cot_vocab", c.policy.cot_vocab},
                 {"lambda", c.policy.lambda},
                 {"temperature", c.policy.temperature},
                 {"markovian", c.policy.markovian},
                 {"init_scale", c.policy.init_scale}};
  j["trainer"] = {{"algorithm", AlgorithmName(c.trainer.algorithm)},
                  {"loss", LossKindName(c.trainer.loss)},
                  {"tasks", c.trainer.tasks},
                  {"trajectories_per_task", c.trainer.trajectories_per_task},
                  {"buffer_capacity", c.trainer.buffer_capacity},
                  {"off_policy", c.trainer.off_policy},
                  {"sft_init", c.trainer.sft_init},
                  {"lr_initial", c.trainer.lr_initial},
                  {"lr_peak", c.trainer.lr_peak},
                  {"lr_final", c.trainer.lr_final},
                  {"lr_peak_step", c.trainer.lr_peak_step},
                  {"total_steps", c.trainer.total_steps},
                  {"rollout_temperature", c.trainer.rollout_temperature},
                  {"baseline_decay", c.trainer.baseline_decay},
                  {"max_loss", c.trainer.max_loss},
                  {"workers", c.trainer.workers}};
  j["sft"] = {{"episodes", c.sft.episodes},
              {"epochs", c.sft.epochs},
              {"batch_size", c.sft.batch_size},
              {"lr", c.sft.lr}};
  j["eval"] = {{"samples", c.eval.samples},
               {"div_n", c.eval.div_n},
               {"div_tasks", c.eval.div_tasks},
               {"temperature", c.eval.temperature}};
  return j.dump(2);
}

}  // namespace gflowseq
