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

#include "gflowseq/eval.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "gflowseq/data.h"
#include "gflowseq/error.h"

namespace gflowseq {
namespace {

struct Enumerator {
  const Vocabulary& vocab;
  std::size_t limit;
  int task;
  std::vector<FlowEntry>* out;

  void Visit(Environment& env, const Trajectory& traj) {
    if (traj.terminated) {
      if (out->size() >= limit) {
        throw SizeError("more than " + std::to_string(limit) +
                        " trajectories to enumerate");
      }
      out->push_back(FlowEntry{TrajectoryKey(traj, vocab), traj, task,
                               traj.terminal_reward, 0.0});
      return;
    }
    const Observation obs = traj.final_observation;
    const std::vector<Token> adm = traj.final_admissible;
    for (Token a : adm) {
      auto child = env.Clone();
      const EnvStep step = child->Step(a);
      Trajectory next = traj;
      next.steps.push_back(StepRecord{obs, adm, {}, a, step.reward});
      next.final_observation = step.observation;
      next.final_admissible = step.admissible;
      if (step.done) {
        next.terminated = true;
        next.terminal_reward = step.reward;
      }
      Visit(*child, next);
    }
  }
};

}  // namespace

double ExactFlowTable::ProbabilityOf(const std::string& key) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), key,
      [](const FlowEntry& e, const std::string& k) { return e.key < k; });
  return it != entries.end() && it->key == key ? it->probability : 0.0;
}

ExactFlowTable EnumerateTarget(const Environment& prototype,
                               std::size_t max_trajectories) {
  if (!prototype.deterministic() || prototype.NumTasks() == 0) {
    throw UnsupportedEnvironmentError(
        std::string(EnvKindName(prototype.config().kind)) +
        " is stochastic and cannot be enumerated");
  }
  const Vocabulary vocab(prototype.ActionNames(), 0);
  ExactFlowTable table;
  const int tasks = prototype.NumTasks();
  for (int task = 0; task < tasks; ++task) {
    auto env = prototype.Clone();
    const ResetResult r = env->ResetToTask(task);
    Trajectory root;
    root.goal = r.goal;
    root.final_observation = r.observation;
    root.final_admissible = r.admissible;
    if (r.admissible.empty()) {
      root.terminated = true;
      root.terminal_reward = env->PrefixReward(root).value();
    }
    const std::size_t first = table.entries.size();
    Enumerator{vocab, max_trajectories, task, &table.entries}.Visit(*env,
                                                                    root);
    double z = 0.0;
    for (std::size_t i = first; i < table.entries.size(); ++i) {
      z += table.entries[i].reward;
    }
    for (std::size_t i = first; i < table.entries.size(); ++i) {
      table.entries[i].probability =
          table.entries[i].reward / (z * static_cast<double>(tasks));
    }
    table.task_z.push_back(z);
    table.z += z;
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const FlowEntry& a, const FlowEntry& b) { return a.key < b.key; });
  return table;
}

ExactFlowTable EnumerateTarget(const EnvConfig& config,
                               std::size_t max_trajectories) {
  return EnumerateTarget(*MakeEnvironment(config), max_trajectories);
}

Distribution TargetDistribution(const ExactFlowTable& table) {
  Distribution d;
  for (const auto& e : table.entries) d[e.key] += e.probability;
  return d;
}

std::vector<Trajectory> SampleTrajectories(const Policy& policy,
                                           const Environment& prototype, int n,
                                           std::uint64_t seed) {
  if (n < 1) throw ContractError("need at least one sample");
  auto env = prototype.Clone();
  Rng rng = MakeRng({seed, 0xe7a1});
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(Rollout(policy, *env,
                          MixSeed({seed, static_cast<std::uint64_t>(i)}), rng));
  }
  return out;
}

Distribution FrequenciesOf(std::span<const Trajectory> trajs,
                           const Vocabulary& vocab) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : trajs) ++counts[TrajectoryKey(t, vocab)];
  Distribution d;
  for (const auto& [k, c] : counts) {
    d[k] = static_cast<double>(c) / static_cast<double>(trajs.size());
  }
  return d;
}

Distribution EmpiricalDistribution(const Policy& policy,
                                   const Environment& prototype, int n,
                                   std::uint64_t seed) {
  return FrequenciesOf(SampleTrajectories(policy, prototype, n, seed),
                       policy.vocabulary());
}

double L1Distance(const Distribution& p, const Distribution& q) {
  double total = 0.0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    total += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q) {
    if (!p.count(k)) total += std::abs(v);
  }
  return total;
}

double KlDivergence(const Distribution& target, const Distribution& model,
                    double eps) {
  std::set<std::string> keys;
  for (const auto& kv : target) keys.insert(kv.first);
  for (const auto& kv : model) keys.insert(kv.first);
  const double n = static_cast<double>(keys.size());
  auto smoothed = [&](const Distribution& d, const std::string& k) {
    auto it = d.find(k);
    return ((it == d.end() ? 0.0 : it->second) + eps) / (1.0 + n * eps);
  };
  double kl = 0.0;
  for (const auto& k : keys) {
    const double p = smoothed(target, k);
    kl += p * std::log(p / smoothed(model, k));
  }
  return kl;
}

Distribution PolicyDistribution(const Policy& policy,
                                const ExactFlowTable& table) {
  if (policy.config().cot_length != 0) {
    throw ContractError("exact policy distribution needs cot_length = 0");
  }
  const double tasks = static_cast<double>(table.task_z.size());
  Distribution d;
  for (const auto& e : table.entries) {
    ad::Tape tape;
    const auto params = policy.Bind(tape);
    const auto score = policy.Score(tape, params, e.trajectory);
    double log_p = 0.0;
    for (const auto& s : score.steps) log_p += s.log_p_action.scalar();
    d[e.key] += std::exp(log_p) / tasks;
  }
  return d;
}

double ExactPolicyL1(const Policy& policy, const ExactFlowTable& table) {
  return L1Distance(PolicyDistribution(policy, table),
                    TargetDistribution(table));
}

double SuccessRate(std::span<const Trajectory> trajs, const Environment& env) {
  if (trajs.empty()) throw EmptySetError("success rate of an empty set");
  std::size_t hits = 0;
  for (const auto& t : trajs) hits += env.Success(t) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(trajs.size());
}

double DivAtN(std::span<const int> successes_per_task) {
  long total = 0;
  long tasks = 0;
  for (int s : successes_per_task) {
    if (s < 0) throw ContractError("negative success count");
    if (s >= 1) {
      total += s;
      ++tasks;
    }
  }
  if (tasks == 0) throw UndefinedMetricError("Div@N undefined: no successes");
  return static_cast<double>(total) / static_cast<double>(tasks);
}

std::vector<int> DistinctSuccesses(const Policy& policy,
                                   const Environment& prototype, int tasks,
                                   int n, std::uint64_t seed) {
  auto env = prototype.Clone();
  std::vector<int> out;
  for (int t = 0; t < tasks; ++t) {
    const std::uint64_t task_seed =
        MixSeed({seed, static_cast<std::uint64_t>(t)});
    Rng rng = MakeRng({seed, static_cast<std::uint64_t>(t), 0xd1f});
    std::set<std::string> distinct;
    for (int i = 0; i < n; ++i) {
      const Trajectory traj = Rollout(policy, *env, task_seed, rng);
      if (env->Success(traj)) {
        distinct.insert(TrajectoryKey(traj, policy.vocabulary()));
      }
    }
    out.push_back(static_cast<int>(distinct.size()));
  }
  return out;
}

double GradCheck(LossKind kind, Policy& policy, const Environment& env,
                 std::span<const Trajectory> batch, double h) {
  const auto analytic = ComputeLossAndGradient(kind, policy, env, batch);
  auto& params = policy.mutable_parameters();
  double worst = 0.0;
  for (std::size_t p = 0; p < params.tensors.size(); ++p) {
    for (std::size_t i = 0; i < params.tensors[p].data.size(); ++i) {
      const double g = analytic.gradient.tensors[p].data[i];
      double& x = params.tensors[p].data[i];
      const double saved = x;
      x = saved + h;
      const double up = EvaluateLoss(kind, policy, env, batch);
      x = saved - h;
      const double down = EvaluateLoss(kind, policy, env, batch);
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      if (std::abs(g) <= 1e-8 && std::abs(numeric) <= 1e-8) continue;
      const double rel = std::abs(g - numeric) /
                         std::max(std::abs(g), std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

std::unique_ptr<TabularPolicy> BuildFlowMatchedPolicy(
    const ExactFlowTable& table, const Vocabulary& vocab,
    const PolicyConfig& config) {
  std::map<std::string, std::map<int, double>> edges;
  for (const auto& e : table.entries) {
    const Trajectory& traj = e.trajectory;
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
      const std::string key =
          CanonicalHistoryText(TrajectoryPrefix(traj, i), vocab);
      edges[key][traj.steps[i].action.id] += e.reward;
    }
  }
  std::vector<std::string> keys;
  for (const auto& kv : edges) keys.push_back(kv.first);
  auto policy = std::make_unique<TabularPolicy>(config, vocab, keys);
  for (const auto& [key, flows] : edges) {
    std::vector<double> logits(static_cast<std::size_t>(vocab.size()), 0.0);
    for (const auto& [id, f] : flows) logits[id] = std::log(f);
    policy->SetLogits(key, logits);
  }
  return policy;
}

}  // namespace gflowseq
