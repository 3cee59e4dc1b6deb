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

#ifndef GFLOWSEQ_TRAINING_H_
#define GFLOWSEQ_TRAINING_H_

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "gflowseq/data.h"
#include "gflowseq/envs.h"
#include "gflowseq/losses.h"
#include "gflowseq/policy.h"

namespace gflowseq {

enum class Algorithm { kGFlowNet, kPolicyGradient };

std::string_view AlgorithmName(Algorithm a);
Algorithm ParseAlgorithm(std::string_view name);

struct TrainerConfig {
  Algorithm algorithm = Algorithm::kGFlowNet;
  LossKind loss = LossKind::kVarTB;
  int tasks = 1000;                 // W; one update per task
  int trajectories_per_task = 4;    // K
  int buffer_capacity = 4;
  bool off_policy = false;
  bool sft_init = false;
  double lr_initial = 1e-5;
  double lr_peak = 1e-5;
  double lr_final = 1e-9;
  int lr_peak_step = 25;
  int total_steps = 0;              // 0 means `tasks`
  // Temperature multiplier used only while collecting rollouts.
  double rollout_temperature = 1.0;
  double baseline_decay = 0.9;      // policy-gradient moving average
  double max_loss = 1e6;
  int workers = 1;

  void Validate() const;
  int ResolvedTotalSteps() const { return total_steps > 0 ? total_steps : tasks; }
};

// Linear warmup lr_initial -> lr_peak until lr_peak_step, then cosine decay
// to lr_final at the last step.
double LrAt(const TrainerConfig& config, long step);

struct AdamState {
  PolicyParameters m;
  PolicyParameters v;
  long t = 0;

  bool operator==(const AdamState&) const = default;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void AdamUpdate(PolicyParameters& params, const PolicyParameters& grad,
                AdamState& state, double lr, const AdamConfig& adam = {});

struct TrainState {
  PolicyParameters params;
  AdamState adam;
  long step = 0;
  double baseline = 0.0;

  bool operator==(const TrainState&) const = default;
};

void SaveTrainState(const std::string& bin_path, const std::string& json_path,
                    const TrainState& state);
TrainState LoadTrainState(const std::string& bin_path,
                          const std::string& json_path);

struct MetricsRow {
  long step = 0;
  long task = 0;
  double loss = 0.0;
  double success_rate = 0.0;
  double mean_reward = 0.0;
  double lr = 0.0;
};

std::string MetricsCsvHeader();
std::string FormatMetricsRow(const MetricsRow& row);

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void Append(const MetricsRow& row) = 0;
};

// Writes the header on open and flushes after every row.
class CsvMetricsSink : public MetricsSink {
 public:
  explicit CsvMetricsSink(const std::string& path);
  void Append(const MetricsRow& row) override;

 private:
  std::ofstream out_;
};

class MemoryMetricsSink : public MetricsSink {
 public:
  void Append(const MetricsRow& row) override { rows.push_back(row); }
  std::vector<MetricsRow> rows;
};

struct TrainHooks {
  MetricsSink* sink = nullptr;
  // Called after each update with the number of updates so far. Returning
  // false stops training.
  std::function<bool(long, const Policy&)> on_update;
};

struct SftConfig {
  int episodes = 200;
  int epochs = 20;
  int batch_size = 16;
  double lr = 1e-2;

  void Validate() const;
};

// Token-level cross-entropy on the labeled CoT and action. Returns the mean
// loss of each epoch. Throws ConfigError for an empty dataset.
std::vector<double> SftTrain(Policy& policy,
                             const std::vector<SftExample>& dataset,
                             const SftConfig& config, std::uint64_t seed);

// GFlowNet training: per task, K rollouts into a fresh buffer (plus one oracle
// run per failed rollout when off-policy), then one update on K samples.
TrainState GfnTrain(Policy& policy, const EnvConfig& env_config,
                    const TrainerConfig& config, std::uint64_t seed,
                    const TrainHooks& hooks = {});

// REINFORCE on raw reward with a moving-average baseline.
TrainState PgBaselineTrain(Policy& policy, const EnvConfig& env_config,
                           const TrainerConfig& config, std::uint64_t seed,
                           const TrainHooks& hooks = {});

}  // namespace gflowseq

#endif  // GFLOWSEQ_TRAINING_H_
