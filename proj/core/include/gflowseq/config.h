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

#ifndef GFLOWSEQ_CONFIG_H_
#define GFLOWSEQ_CONFIG_H_

#include <cstdint>
#include <string>

#include "gflowseq/envs.h"
#include "gflowseq/policy.h"
#include "gflowseq/training.h"

namespace gflowseq {

struct EvalConfig {
  int samples = 50000;    // rollouts for the empirical distribution
  int div_n = 16;         // N of Div@N
  int div_tasks = 16;     // tasks sampled for Div@N
  double temperature = 1.0;

  void Validate() const;
};

struct RunConfig {
  EnvConfig env;
  PolicyConfig policy;
  TrainerConfig trainer;
  SftConfig sft;
  EvalConfig eval;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  void Validate() const;
};

// Parses a JSON document. Missing keys keep their defaults; unknown keys and
// type errors raise ConfigError naming the field path (e.g. "trainer.tasks").
RunConfig ParseRunConfig(const std::string& json_text);
RunConfig LoadRunConfig(const std::string& path);

// Canonical JSON with every field spelled out.
std::string RunConfigToJson(const RunConfig& config);

}  // namespace gflowseq

#endif  // GFLOWSEQ_CONFIG_H_
