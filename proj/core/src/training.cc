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

#include "gflowseq/training.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "gflowseq/error.h"
#include "json.hpp"

namespace gflowseq {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::uint64_t kTaskTag = 0x7a5c;
constexpr std::uint64_t kEpisodeTag = 0x2011;
constexpr std::uint64_t kBatchTag = 0xb0ff;

struct TaskRollouts {
  std::uint64_t task_seed = 0;
  std::vector<Trajectory> trajs;
  double success_rate = 0.0;
  double mean_reward = 0.0;
};

// K episodes of one task; episode k draws from its own stream so the result
// does not depend on the worker count.
TaskRollouts CollectTask(const Policy& policy, const Environment& prototype,
                         const TrainerConfig& config, std::uint64_t seed,
                         long task) {
  TaskRollouts out;
  const auto w = static_cast<std::uint64_t>(task);
  out.task_seed = MixSeed({seed, w, kTaskTag});
  const int k_total = config.trajectories_per_task;
  out.trajs.resize(static_cast<std::size_t>(k_total));

  std::unique_ptr<Policy> tempered;
  const Policy* actor = &policy;
  if (config.rollout_temperature != 1.0) {
    tempered = policy.Clone();
    tempered->SetTemperature(policy.config().temperature *
                             config.rollout_temperature);
    actor = tempered.get();
  }

  auto run = [&](int worker, int stride) {
    auto env = prototype.Clone();
    for (int k = worker; k < k_total; k += stride) {
      Rng rng = MakeRng({seed, w, static_cast<std::uint64_t>(k), kEpisodeTag});
      out.trajs[static_cast<std::size_t>(k)] =
          Rollout(*actor, *env, out.task_seed, rng);
    }
  };
  const int workers = std::min(config.workers, k_total);
  if (workers <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back([&, i] {
        try {
          run(i, workers);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  double hits = 0.0;
  double reward = 0.0;
  for (const auto& t : out.trajs) {
    hits += prototype.Success(t) ? 1.0 : 0.0;
    reward += t.terminal_reward;
  }
  out.success_rate = hits / k_total;
  out.mean_reward = reward / k_total;
  return out;
}

void CheckLoss(double loss, const TrainerConfig& config, long task) {
  if (!std::isfinite(loss) || loss > config.max_loss) {
    std::ostringstream msg;
    msg << "training diverged at task " << task << ": loss "
        << FormatDouble(loss) << " (limit " << FormatDouble(config.max_loss)
        << ")";
    throw DivergenceError(msg.str());
  }
}

void Emit(const TrainHooks& hooks, const MetricsRow& row) {
  if (hooks.sink) hooks.sink->Append(row);
}

TrainState InitialState(const Policy& policy) {
  TrainState state;
  state.params = policy.parameters();
  state.adam.m = state.params.ZerosLike();
  state.adam.v = state.params.ZerosLike();
  return state;
}

std::string Hex(double v) {
  std::ostringstream s;
  s << std::hex << std::bit_cast<std::uint64_t>(v);
  return s.str();
}

double FromHex(const std::string& text) {
  return std::bit_cast<double>(std::stoull(text, nullptr, 16));
}

void Append(PolicyParameters& dst, const PolicyParameters& src,
            const std::string& prefix) {
  for (std::size_t i = 0; i < src.tensors.size(); ++i) {
    dst.names.push_back(prefix + src.names[i]);
    dst.tensors.push_back(src.tensors[i]);
  }
}

}  // namespace

std::string_view AlgorithmName(Algorithm a) {
  return a == Algorithm::kGFlowNet ? "gflownet" : "policy_gradient";
}

Algorithm ParseAlgorithm(std::string_view name) {
  if (name == "gflownet") return Algorithm::kGFlowNet;
  if (name == "policy_gradient") return Algorithm::kPolicyGradient;
  throw ConfigError("unknown algorithm '" + std::string(name) +
                    "' (expected gflownet or policy_gradient)");
}

void TrainerConfig::Validate() const {
  if (tasks < 1) throw ConfigError("trainer.tasks: must be >= 1");
  if (trajectories_per_task < 1) {
    throw ConfigError("trainer.trajectories_per_task: must be >= 1");
  }
  if (algorithm == Algorithm::kGFlowNet && loss == LossKind::kVarTB &&
      trajectories_per_task < 2) {
    throw ConfigError("trainer.trajectories_per_task: var_tb needs >= 2");
  }
  if (buffer_capacity < 1) throw ConfigError("trainer.buffer_capacity: must be >= 1");
  if (!(lr_final > 0.0)) throw ConfigError("trainer.lr_final: must be > 0");
  if (!(lr_initial >= lr_final)) {
    throw ConfigError("trainer.lr_initial: must be >= lr_final");
  }
  if (!(lr_peak >= lr_final)) throw ConfigError("trainer.lr_peak: must be >= lr_final");
  if (lr_peak_step < 0) throw ConfigError("trainer.lr_peak_step: must be >= 0");
  if (total_steps < 0) throw ConfigError("trainer.total_steps: must be >= 0");
  if (!(rollout_temperature > 0.0)) {
    throw ConfigError("trainer.rollout_temperature: must be > 0");
  }
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) {
    throw ConfigError("trainer.baseline_decay: must lie in [0, 1)");
  }
  if (!(max_loss > 0.0)) throw ConfigError("trainer.max_loss: must be > 0");
  if (workers < 1) throw ConfigError("trainer.workers: must be >= 1");
}

double LrAt(const TrainerConfig& c, long step) {
  if (step < 0) throw RangeError("negative step");
  const long total = c.ResolvedTotalSteps();
  const long peak = c.lr_peak_step;
  if (step >= total) return c.lr_final;
  if (step < peak) {
    const double frac = static_cast<double>(step) / static_cast<double>(peak);
    return c.lr_initial + (c.lr_peak - c.lr_initial) * frac;
  }
  const double frac = static_cast<double>(step - peak) /
                      static_cast<double>(std::max(1L, total - peak));
  return c.lr_final +
         0.5 * (c.lr_peak - c.lr_final) * (1.0 + std::cos(M_PI * frac));
}

void AdamUpdate(PolicyParameters& params, const PolicyParameters& grad,
                AdamState& state, double lr, const AdamConfig& adam) {
  if (!params.SameShapes(grad)) throw ShapeError("gradient shape mismatch");
  if (state.m.tensors.empty()) {
    state.m = params.ZerosLike();
    state.v = params.ZerosLike();
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.tensors.size(); ++p) {
    auto& x = params.tensors[p].data;
    const auto& g = grad.tensors[p].data;
    auto& m = state.m.tensors[p].data;
    auto& v = state.v.tensors[p].data;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
      v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g[i] * g[i];
      x[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam.eps);
    }
  }
}

void SaveTrainState(const std::string& bin_path, const std::string& json_path,
                    const TrainState& state) {
  PolicyParameters all;
  Append(all, state.params, "param/");
  Append(all, state.adam.m, "adam_m/");
  Append(all, state.adam.v, "adam_v/");
  Json meta;
  meta["step"] = state.step;
  meta["adam_t"] = state.adam.t;
  meta["num_params"] = state.params.tensors.size();
  meta["baseline_bits"] = Hex(state.baseline);
  SaveParameters(bin_path, json_path, all, meta.dump());
}

TrainState LoadTrainState(const std::string& bin_path,
                          const std::string& json_path) {
  const PolicyParameters all = LoadParameters(bin_path, json_path);
  TrainState state;
  try {
    const Json meta = Json::parse(LoadParametersMeta(json_path));
    const std::size_t n = meta.at("num_params").get<std::size_t>();
    if (all.tensors.size() != 3 * n) {
      throw DataCorruptionError("trainer state tensor count mismatch");
    }
    for (std::size_t i = 0; i < all.tensors.size(); ++i) {
      PolicyParameters& dst =
          i < n ? state.params : (i < 2 * n ? state.adam.m : state.adam.v);
      const std::string& name = all.names[i];
      dst.names.push_back(name.substr(name.find('/') + 1));
      dst.tensors.push_back(all.tensors[i]);
    }
    state.step = meta.at("step").get<long>();
    state.adam.t = meta.at("adam_t").get<long>();
    state.baseline = FromHex(meta.at("baseline_bits").get<std::string>());
  } catch (const Json::exception& e) {
    throw DataCorruptionError(std::string("bad trainer state: ") + e.what());
  }
  return state;
}

std::string MetricsCsvHeader() {
  return "step,task,loss,success_rate,mean_reward,lr";
}

std::string FormatMetricsRow(const MetricsRow& r) {
  return std::to_string(r.step) + "," + std::to_string(r.task) + "," +
         FormatDouble(r.loss) + "," + FormatDouble(r.success_rate) + "," +
         FormatDouble(r.mean_reward) + "," + FormatDouble(r.lr);
}

CsvMetricsSink::CsvMetricsSink(const std::string& path)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot write " + path);
  out_ << MetricsCsvHeader() << '\n';
  out_.flush();
}

void CsvMetricsSink::Append(const MetricsRow& row) {
  out_ << FormatMetricsRow(row) << '\n';
  out_.flush();
}

void SftConfig::Validate() const {
  if (episodes < 1) throw ConfigError("sft.episodes: must be >= 1");
  if (epochs < 1) throw ConfigError("sft.epochs: must be >= 1");
  if (batch_size < 1) throw ConfigError("sft.batch_size: must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("sft.lr: must be > 0");
}

std::vector<double> SftTrain(Policy& policy,
                             const std::vector<SftExample>& dataset,
                             const SftConfig& config, std::uint64_t seed) {
  config.Validate();
  if (dataset.empty()) throw ConfigError("sft: dataset is empty");
  std::vector<Trajectory> items;
  items.reserve(dataset.size());
  for (const auto& ex : dataset) items.push_back(ex.AsTrajectory());

  Rng rng = MakeRng({seed, 0x5f7});
  AdamState adam;
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> epoch_losses;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[UniformIndex(rng, i)]);
    }
    double total = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      ad::Tape tape;
      const auto params = policy.Bind(tape);
      ad::Var loss = tape.Constant(0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto score = policy.Score(tape, params, items[order[b]]);
        const StepScore& last = score.steps.back();
        loss = ad::Sub(loss, ad::Add(last.log_p_action, last.log_p_cot));
      }
      loss = ad::Scale(loss, 1.0 / static_cast<double>(end - start));
      tape.Backward(loss);
      PolicyParameters grad;
      grad.names = policy.parameters().names;
      for (ad::Var p : params) grad.tensors.push_back(tape.Grad(p));
      AdamUpdate(policy.mutable_parameters(), grad, adam, config.lr);
      total += loss.scalar() * static_cast<double>(end - start);
    }
    epoch_losses.push_back(total / static_cast<double>(items.size()));
  }
  return epoch_losses;
}

TrainState GfnTrain(Policy& policy, const EnvConfig& env_config,
                    const TrainerConfig& config, std::uint64_t seed,
                    const TrainHooks& hooks) {
  config.Validate();
  env_config.Validate();
  if (config.loss != LossKind::kVarTB && !env_config.done_action) {
    throw ConfigError("env.done_action: must be true for subtb/db");
  }
  if (config.off_policy && env_config.kind == EnvKind::kSequencePattern) {
    throw ConfigError("trainer.off_policy: sequence_pattern has no oracle");
  }
  auto prototype = MakeEnvironment(env_config);
  auto oracle_env = prototype->Clone();
  TrainState state = InitialState(policy);
  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  const auto k = static_cast<std::size_t>(config.trajectories_per_task);

  for (long w = 0; w < config.tasks; ++w) {
    TaskRollouts r = CollectTask(policy, *prototype, config, seed, w);
    buffer.Clear();
    int failed = 0;
    for (auto& t : r.trajs) {
      failed += prototype->Success(t) ? 0 : 1;
      buffer.Push(t);
    }
    if (config.off_policy && failed > 0) {
      Trajectory oracle = OracleRollout(*oracle_env, r.task_seed);
      AttachOracleCot(oracle, policy.vocabulary(), policy.config().cot_length);
      for (int i = 0; i < failed; ++i) buffer.Push(oracle);
    }
    Rng batch_rng = MakeRng({seed, static_cast<std::uint64_t>(w), kBatchTag});
    const auto batch = buffer.Sample(k, batch_rng);
    const auto lg = ComputeLossAndGradient(config.loss, policy, *prototype, batch);
    CheckLoss(lg.loss, config, w);
    const double lr = LrAt(config, w);
    AdamUpdate(policy.mutable_parameters(), lg.gradient, state.adam, lr);
    state.step = w + 1;
    Emit(hooks, MetricsRow{w, w, lg.loss, r.success_rate, r.mean_reward, lr});
    if (hooks.on_update && !hooks.on_update(state.step, policy)) break;
  }
  state.params = policy.parameters();
  return state;
}

TrainState PgBaselineTrain(Policy& policy, const EnvConfig& env_config,
                           const TrainerConfig& config, std::uint64_t seed,
                           const TrainHooks& hooks) {
  config.Validate();
  env_config.Validate();
  auto prototype = MakeEnvironment(env_config);
  TrainState state = InitialState(policy);
  for (long w = 0; w < config.tasks; ++w) {
    TaskRollouts r = CollectTask(policy, *prototype, config, seed, w);
    ad::Tape tape;
    const auto params = policy.Bind(tape);
    ad::Var loss = tape.Constant(0.0);
    double mean_raw = 0.0;
    for (const auto& t : r.trajs) {
      const double raw = prototype->RawReturn(t);
      mean_raw += raw;
      const auto score = policy.Score(tape, params, t);
      ad::Var log_p = tape.Constant(0.0);
      for (const auto& s : score.steps) log_p = ad::Add(log_p, s.log_p_forward);
      loss = ad::Sub(loss, ad::Scale(log_p, raw - state.baseline));
    }
    const double kk = static_cast<double>(r.trajs.size());
    loss = ad::Scale(loss, 1.0 / kk);
    mean_raw /= kk;
    tape.Backward(loss);
    PolicyParameters grad;
    grad.names = policy.parameters().names;
    for (ad::Var p : params) grad.tensors.push_back(tape.Grad(p));
    CheckLoss(std::abs(loss.scalar()), config, w);
    const double lr = LrAt(config, w);
    AdamUpdate(policy.mutable_parameters(), grad, state.adam, lr);
    state.baseline = config.baseline_decay * state.baseline +
                     (1.0 - config.baseline_decay) * mean_raw;
    state.step = w + 1;
    Emit(hooks,
         MetricsRow{w, w, loss.scalar(), r.success_rate, r.mean_reward, lr});
    if (hooks.on_update && !hooks.on_update(state.step, policy)) break;
  }
  state.params = policy.parameters();
  return state;
}

}  // namespace gflowseq
