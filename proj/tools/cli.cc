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

#include "cli.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>

#include "CLI11.hpp"
#include "gflowseq/config.h"
#include "gflowseq/data.h"
#include "gflowseq/error.h"
#include "gflowseq/eval.h"
#include "gflowseq/training.h"
#include "json.hpp"

namespace gflowseq::cli {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<spdlog::logger> Log() {
  static auto logger = [] {
    auto l = spdlog::stderr_color_mt("gflowseq");
    const char* level = std::getenv("GFLOWSEQ_LOG");
    const std::string name = level ? level : "info";
    if (name == "error") {
      l->set_level(spdlog::level::err);
    } else if (name == "debug") {
      l->set_level(spdlog::level::debug);
    } else {
      l->set_level(spdlog::level::info);
    }
    l->set_pattern("[%l] %v");
    return l;
  }();
  return logger;
}

RunConfig Resolve(const Options& o) {
  RunConfig c = LoadRunConfig(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.output_dir = *o.out_dir;
  if (o.workers) c.trainer.workers = *o.workers;
  c.Validate();
  return c;
}

fs::path PrepareOutput(const RunConfig& c) {
  fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string PolicyMeta(const RunConfig& c) {
  nlohmann::ordered_json meta;
  meta["run_config"] = nlohmann::ordered_json::parse(RunConfigToJson(c));
  return meta.dump();
}

// Maps "dir/policy", "dir/policy.bin" or "dir/policy.json" to the pair.
std::pair<std::string, std::string> CheckpointFiles(std::string path) {
  for (const char* ext : {".bin", ".json"}) {
    const std::string e(ext);
    if (path.size() > e.size() &&
        path.compare(path.size() - e.size(), e.size(), e) == 0) {
      path.resize(path.size() - e.size());
      break;
    }
  }
  return {path + ".bin", path + ".json"};
}

template <typename Fn>
int Guard(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    Log()->error("config error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    Log()->error("{}", e.what());
    return kExitRuntime;
  }
}

}  // namespace

int CmdTrain(const Options& options) {
  return Guard([&] {
    const RunConfig c = Resolve(options);
    const fs::path dir = PrepareOutput(c);
    WriteText(dir / "run_config.json", RunConfigToJson(c) + "\n");
    auto env = MakeEnvironment(c.env);
    auto policy = MakeRecurrentPolicy(*env, c.policy, c.seed);
    Log()->info("train: env={} loss={} tasks={} params={}",
                EnvKindName(c.env.kind), LossKindName(c.trainer.loss),
                c.trainer.tasks, policy->parameters().NumScalars());

    if (c.trainer.sft_init) {
      Rng rng = MakeRng({c.seed, 0x5f7d});
      const auto dataset =
          BuildSftDataset(c.env, c.sft.episodes, policy->vocabulary(),
                          c.policy.cot_length, rng);
      WriteSftDataset((dir / "sft.jsonl").string(), dataset,
                      policy->vocabulary());
      const auto losses = SftTrain(*policy, dataset, c.sft, c.seed);
      std::string csv = "epoch,loss\n";
      for (std::size_t i = 0; i < losses.size(); ++i) {
        csv += std::to_string(i) + "," + FormatDouble(losses[i]) + "\n";
      }
      WriteText(dir / "sft_metrics.csv", csv);
      SaveParameters((dir / "policy_sft.bin").string(),
                     (dir / "policy_sft.json").string(), policy->parameters(),
                     PolicyMeta(c));
      Log()->info("sft: {} examples, final loss {}", dataset.size(),
                  FormatDouble(losses.back()));
    }

    CsvMetricsSink sink((dir / "metrics.csv").string());
    TrainHooks hooks;
    hooks.sink = &sink;
    const long every = std::max(1, c.trainer.tasks / 10);
    hooks.on_update = [&](long step, const Policy&) {
      if (step % every == 0) Log()->info("step {}/{}", step, c.trainer.tasks);
      return true;
    };
    const TrainState state =
        c.trainer.algorithm == Algorithm::kGFlowNet
            ? GfnTrain(*policy, c.env, c.trainer, c.seed, hooks)
            : PgBaselineTrain(*policy, c.env, c.trainer, c.seed, hooks);
    SaveParameters((dir / "policy.bin").string(),
                   (dir / "policy.json").string(), policy->parameters(),
                   PolicyMeta(c));
    SaveTrainState((dir / "trainer_state.bin").string(),
                   (dir / "trainer_state.json").string(), state);
    Log()->info("wrote {}", dir.string());
    return kExitOk;
  });
}

int CmdEval(const Options& options) {
  return Guard([&] {
    const RunConfig c = Resolve(options);
    if (options.checkpoint.empty()) {
      throw ConfigError("--checkpoint: required for eval");
    }
    const fs::path dir = PrepareOutput(c);
    auto env = MakeEnvironment(c.env);
    auto policy = MakeRecurrentPolicy(*env, c.policy, c.seed);
    const auto [bin, json] = CheckpointFiles(options.checkpoint);
    PolicyParameters loaded = LoadParameters(bin, json);
    if (loaded.names != policy->parameters().names ||
        !loaded.SameShapes(policy->parameters())) {
      throw ShapeError("checkpoint " + bin +
                       " does not match the policy configuration");
    }
    policy->mutable_parameters() = std::move(loaded);
    policy->SetTemperature(c.eval.temperature);

    std::vector<std::pair<std::string, std::string>> rows;
    const auto trajs = SampleTrajectories(*policy, *env, c.eval.samples, c.seed);
    const Distribution empirical = FrequenciesOf(trajs, policy->vocabulary());
    rows.emplace_back("success_rate", FormatDouble(SuccessRate(trajs, *env)));
    const auto successes = DistinctSuccesses(*policy, *env, c.eval.div_tasks,
                                             c.eval.div_n, c.seed);
    try {
      rows.emplace_back("div_at_" + std::to_string(c.eval.div_n),
                        FormatDouble(DivAtN(successes)));
    } catch (const UndefinedMetricError&) {
      rows.emplace_back("div_at_" + std::to_string(c.eval.div_n), "undefined");
    }
    if (env->deterministic() && env->NumTasks() > 0) {
      const ExactFlowTable table = EnumerateTarget(*env);
      const Distribution target = TargetDistribution(table);
      rows.emplace_back("l1", FormatDouble(L1Distance(empirical, target)));
      rows.emplace_back("kl", FormatDouble(KlDivergence(target, empirical)));
    }
    rows.emplace_back("samples", std::to_string(c.eval.samples));

    std::string csv = "metric,value\n";
    for (const auto& [k, v] : rows) csv += k + "," + v + "\n";
    WriteText(dir / "eval.csv", csv);
    for (const auto& [k, v] : rows) Log()->info("{} = {}", k, v);
    return kExitOk;
  });
}

int CmdOracle(const Options& options) {
  return Guard([&] {
    const RunConfig c = Resolve(options);
    const fs::path dir = PrepareOutput(c);
    const ExactFlowTable table = EnumerateTarget(c.env);
    std::string csv = "key,reward,probability\n";
    for (const auto& e : table.entries) {
      csv += CsvField(e.key) + "," + FormatDouble(e.reward) + "," +
             FormatDouble(e.probability) + "\n";
    }
    WriteText(dir / "oracle.csv", csv);
    Log()->info("oracle: {} trajectories, Z = {}", table.entries.size(),
                FormatDouble(table.z));
    return kExitOk;
  });
}

int Main(int argc, const char* const* argv) {
  CLI::App app{"GFlowNet fine-tuning of sequential token policies"};
  app.require_subcommand(1);
  Options o;
  unsigned long long seed = 0;
  std::string out;
  int workers = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Run configuration (JSON)")
        ->required();
    sub->add_option("--seed", seed, "Override the run seed");
    sub->add_option("--out", out, "Override the output directory");
    sub->add_option("--workers", workers, "Rollout worker threads")
        ->check(CLI::PositiveNumber);
  };
  auto* train = app.add_subcommand("train", "SFT (optional) then training");
  add_common(train);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", o.checkpoint,
                   "Checkpoint prefix, .bin or .json path")
      ->required();
  auto* oracle = app.add_subcommand("oracle", "Write the exact target table");
  add_common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (auto* sub : {train, eval, oracle}) {
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--out")) o.out_dir = out;
    if (sub->count("--workers")) o.workers = workers;
  }
  if (train->parsed()) return CmdTrain(o);
  if (eval->parsed()) return CmdEval(o);
  return CmdOracle(o);
}

}  // namespace gflowseq::cli
