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

#ifndef GFLOWSEQ_LOSSES_H_
#define GFLOWSEQ_LOSSES_H_

#include <span>
#include <string_view>
#include <vector>

#include "gflowseq/autodiff.h"
#include "gflowseq/envs.h"
#include "gflowseq/policy.h"
#include "gflowseq/trajectory.h"

namespace gflowseq {

enum class LossKind { kVarTB, kSubTB, kDB };

std::string_view LossKindName(LossKind kind);
LossKind ParseLossKind(std::string_view name);

struct LossConfig {
  LossKind kind = LossKind::kVarTB;
  int batch_size = 4;

  void Validate() const;
};

// log R(z_{0:i}T) for i = 0..m, where m counts the non-terminating steps.
std::vector<double> PrefixLogRewards(const Environment& env,
                                     const Trajectory& traj);

// zeta = sum_t log P_F(step t) - log R(x). The backward policy is 1.
ad::Var Zeta(ad::Tape& tape, const TrajectoryScore& score,
             double terminal_reward);

// (1/K) sum_k (zeta_k - mean zeta)^2. Throws ConfigError when K < 2.
ad::Var VarTbLoss(ad::Tape& tape, std::span<const ad::Var> zetas);

// Sum over 0 <= i < j <= m of squared sub-trajectory residuals.
ad::Var SubTbLoss(ad::Tape& tape, const TrajectoryScore& score,
                  std::span<const double> prefix_log_rewards);

// Residual of the transition z_{0:t} -> z_{0:t+1}.
ad::Var DbResidual(const TrajectoryScore& score,
                   std::span<const double> prefix_log_rewards, std::size_t t);

// Sum over the m transitions of squared residuals.
ad::Var DbLoss(ad::Tape& tape, const TrajectoryScore& score,
               std::span<const double> prefix_log_rewards);

// Batch objective. Var-TB takes the variance across the batch; SubTB and DB
// average the per-trajectory sums.
ad::Var BatchLoss(LossKind kind, const Policy& policy, const Environment& env,
                  ad::Tape& tape, std::span<const ad::Var> params,
                  std::span<const Trajectory> batch);

struct LossAndGradient {
  double loss = 0.0;
  PolicyParameters gradient;
};

LossAndGradient ComputeLossAndGradient(LossKind kind, const Policy& policy,
                                       const Environment& env,
                                       std::span<const Trajectory> batch);

// Forward-only evaluation.
double EvaluateLoss(LossKind kind, const Policy& policy, const Environment& env,
                    std::span<const Trajectory> batch);

}  // namespace gflowseq

#endif  // GFLOWSEQ_LOSSES_H_
