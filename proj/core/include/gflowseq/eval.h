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

#ifndef GFLOWSEQ_EVAL_H_
#define GFLOWSEQ_EVAL_H_

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gflowseq/envs.h"
#include "gflowseq/losses.h"
#include "gflowseq/policy.h"
#include "gflowseq/trajectory.h"

namespace gflowseq {

struct FlowEntry {
  std::string key;  // TrajectoryKey
  Trajectory trajectory;
  int task = 0;
  double reward = 0.0;
  double probability = 0.0;
};

struct ExactFlowTable {
  std::vector<FlowEntry> entries;  // sorted by key
  std::vector<double> task_z;      // partition function per task
  double z = 0.0;                  // sum of all rewards

  double ProbabilityOf(const std::string& key) const;  // 0 if absent
};

// Depth-first enumeration of every trajectory of every task. Tasks are
// weighted uniformly, so probability = R / (num_tasks * Z_task). Throws
// UnsupportedEnvironmentError for stochastic environments and SizeError when
// more than `max_trajectories` exist.
ExactFlowTable EnumerateTarget(const Environment& prototype,
                               std::size_t max_trajectories = 1000000);
ExactFlowTable EnumerateTarget(const EnvConfig& config,
                               std::size_t max_trajectories = 1000000);

using Distribution = std::map<std::string, double>;

Distribution TargetDistribution(const ExactFlowTable& table);

// n rollouts; episode i uses the reset seed MixSeed({seed, i}).
std::vector<Trajectory> SampleTrajectories(const Policy& policy,
                                           const Environment& prototype, int n,
                                           std::uint64_t seed);
// Frequencies of TrajectoryKey.
Distribution FrequenciesOf(std::span<const Trajectory> trajs,
                           const Vocabulary& vocab);
// FrequenciesOf(SampleTrajectories(...)).
Distribution EmpiricalDistribution(const Policy& policy,
                                   const Environment& prototype, int n,
                                   std::uint64_t seed);

double L1Distance(const Distribution& p, const Distribution& q);
// KL(target || model) with both sides smoothed by eps.
double KlDivergence(const Distribution& target, const Distribution& model,
                    double eps = 1e-12);

// Exact trajectory distribution of a CoT-free policy over the table's
// support (each task weighted uniformly).
Distribution PolicyDistribution(const Policy& policy,
                                const ExactFlowTable& table);
double ExactPolicyL1(const Policy& policy, const ExactFlowTable& table);

// Throws EmptySetError for an empty set.
double SuccessRate(std::span<const Trajectory> trajs, const Environment& env);

// sum_i S_i 1(S_i >= 1) / sum_i 1(S_i >= 1). Throws UndefinedMetricError when
// no task succeeded.
double DivAtN(std::span<const int> successes_per_task);

// Distinct successful action sequences per task over n rollouts each. Task
// t uses reset seed MixSeed({seed, t}) for every rollout.
std::vector<int> DistinctSuccesses(const Policy& policy,
                                   const Environment& prototype, int tasks,
                                   int n, std::uint64_t seed);

// Central-difference check of the loss gradient over every parameter.
// Returns the max relative error over entries with |g| > 1e-8.
double GradCheck(LossKind kind, Policy& policy, const Environment& env,
                 std::span<const Trajectory> batch, double h = 1e-5);

// Tabular policy whose edge logits are log edge flows of the table, so that
// it samples each trajectory with probability R / Z_task.
std::unique_ptr<TabularPolicy> BuildFlowMatchedPolicy(
    const ExactFlowTable& table, const Vocabulary& vocab,
    const PolicyConfig& config);

}  // namespace gflowseq

#endif  // GFLOWSEQ_EVAL_H_
