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

#include "gflowseq/losses.h"

#include <cmath>
#include <string>

#include "gflowseq/error.h"

namespace gflowseq {
namespace {

using ad::Var;

// phi_j = sum_{k<j} log P_F(step k) + log P_F(T | z_j) - log R(z_j), so that
// every balance residual is phi_j - phi_i.
std::vector<Var> Potentials(ad::Tape& tape, const TrajectoryScore& score,
                            std::span<const double> log_r) {
  const std::size_t m = log_r.size() - 1;
  if (m > score.steps.size()) throw ContractError("reward/score size mismatch");
  std::vector<Var> phi;
  phi.reserve(m + 1);
  Var cum = tape.Constant(0.0);
  for (std::size_t j = 0; j <= m; ++j) {
    if (j > 0) cum = ad::Add(cum, score.steps[j - 1].log_p_forward);
    phi.push_back(ad::AddScalar(ad::Add(cum, score.LogPDone(j)), -log_r[j]));
  }
  return phi;
}

void RequireDoneEnding(const Environment& env, const Trajectory& traj) {
  if (!env.done_action()) {
    throw ConfigError("SubTB/DB need env.done_action = true");
  }
  if (traj.steps.empty() || traj.steps.back().action.id != 0) {
    throw ContractError("SubTB/DB trajectory must end with [DONE]");
  }
}

}  // namespace

std::string_view LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kVarTB:
      return "var_tb";
    case LossKind::kSubTB:
      return "subtb";
    case LossKind::kDB:
      return "db";
  }
  return "?";
}

LossKind ParseLossKind(std::string_view name) {
  if (name == "var_tb") return LossKind::kVarTB;
  if (name == "subtb") return LossKind::kSubTB;
  if (name == "db") return LossKind::kDB;
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected var_tb, subtb or db)");
}

void LossConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("loss.batch_size: must be >= 1");
  if (kind == LossKind::kVarTB && batch_size < 2) {
    throw ConfigError("loss.batch_size: var_tb needs at least 2");
  }
}

std::vector<double> PrefixLogRewards(const Environment& env,
                                     const Trajectory& traj) {
  std::size_t m = traj.steps.size();
  if (m > 0 && traj.steps.back().action.id == 0) --m;
  std::vector<double> out;
  out.reserve(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    out.push_back(std::log(env.PrefixReward(TrajectoryPrefix(traj, i)).value()));
  }
  return out;
}

Var Zeta(ad::Tape& tape, const TrajectoryScore& score,
         double terminal_reward) {
  const double log_r = std::log(ShapedReward(terminal_reward).value());
  Var sum = tape.Constant(0.0);
  for (const auto& s : score.steps) sum = ad::Add(sum, s.log_p_forward);
  return ad::AddScalar(sum, -log_r);
}

Var VarTbLoss(ad::Tape& tape, std::span<const Var> zetas) {
  const std::size_t k = zetas.size();
  if (k < 2) throw ConfigError("var_tb needs a batch of at least 2");
  Var mean = tape.Constant(0.0);
  for (Var z : zetas) mean = ad::Add(mean, z);
  mean = ad::Scale(mean, 1.0 / static_cast<double>(k));
  Var total = tape.Constant(0.0);
  for (Var z : zetas) total = ad::Add(total, ad::Square(ad::Sub(z, mean)));
  return ad::Scale(total, 1.0 / static_cast<double>(k));
}

Var SubTbLoss(ad::Tape& tape, const TrajectoryScore& score,
              std::span<const double> prefix_log_rewards) {
  const auto phi = Potentials(tape, score, prefix_log_rewards);
  Var total = tape.Constant(0.0);
  for (std::size_t j = 1; j < phi.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      total = ad::Add(total, ad::Square(ad::Sub(phi[j], phi[i])));
    }
  }
  return total;
}

Var DbResidual(const TrajectoryScore& score,
               std::span<const double> prefix_log_rewards, std::size_t t) {
  if (t + 1 >= prefix_log_rewards.size()) {
    throw RangeError("transition " + std::to_string(t) + " out of range");
  }
  const StepScore& s = score.steps[t];
  Var lhs = ad::AddScalar(ad::Add(s.log_p_forward, score.LogPDone(t + 1)),
                          prefix_log_rewards[t]);
  Var rhs = ad::AddScalar(score.LogPDone(t), prefix_log_rewards[t + 1]);
  return ad::Sub(lhs, rhs);
}

Var DbLoss(ad::Tape& tape, const TrajectoryScore& score,
           std::span<const double> prefix_log_rewards) {
  Var total = tape.Constant(0.0);
  for (std::size_t t = 0; t + 1 < prefix_log_rewards.size(); ++t) {
    total = ad::Add(total,
                    ad::Square(DbResidual(score, prefix_log_rewards, t)));
  }
  return total;
}

Var BatchLoss(LossKind kind, const Policy& policy, const Environment& env,
              ad::Tape& tape, std::span<const Var> params,
              std::span<const Trajectory> batch) {
  if (batch.empty()) throw EmptyBufferError("empty loss batch");
  if (kind == LossKind::kVarTB) {
    std::vector<Var> zetas;
    for (const auto& traj : batch) {
      if (!traj.terminated) throw ContractError("var_tb needs finished runs");
      zetas.push_back(
          Zeta(tape, policy.Score(tape, params, traj), traj.terminal_reward));
    }
    return VarTbLoss(tape, zetas);
  }
  Var total = tape.Constant(0.0);
  for (const auto& traj : batch) {
    RequireDoneEnding(env, traj);
    const auto log_r = PrefixLogRewards(env, traj);
    const auto score = policy.Score(tape, params, traj);
    total = ad::Add(total, kind == LossKind::kSubTB
                               ? SubTbLoss(tape, score, log_r)
                               : DbLoss(tape, score, log_r));
  }
  return ad::Scale(total, 1.0 / static_cast<double>(batch.size()));
}

LossAndGradient ComputeLossAndGradient(LossKind kind, const Policy& policy,
                                       const Environment& env,
                                       std::span<const Trajectory> batch) {
  ad::Tape tape;
  const auto params = policy.Bind(tape);
  Var loss = BatchLoss(kind, policy, env, tape, params, batch);
  tape.Backward(loss);
  LossAndGradient out;
  out.loss = loss.scalar();
  out.gradient.names = policy.parameters().names;
  for (Var p : params) out.gradient.tensors.push_back(tape.Grad(p));
  return out;
}

double EvaluateLoss(LossKind kind, const Policy& policy,
                    const Environment& env,
                    std::span<const Trajectory> batch) {
  ad::Tape tape;
  const auto params = policy.Bind(tape);
  return BatchLoss(kind, policy, env, tape, params, batch).scalar();
}

}  // namespace gflowseq
