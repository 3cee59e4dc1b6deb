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


// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Pass criterion numbers as arguments
// to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.h"
#include "gflowseq/config.h"
#include "gflowseq/data.h"
#include "gflowseq/eval.h"
#include "gflowseq/losses.h"
#include "gflowseq/training.h"

namespace gs = gflowseq;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Runs f(0..n-1) on separate threads and returns the results in order.
template <typename T>
std::vector<T> ForEachSeed(int n, const std::function<T(int)>& f) {
  std::vector<T> out(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) {
    pool.emplace_back([&, i] { out[static_cast<std::size_t>(i)] = f(i); });
  }
  for (auto& t : pool) t.join();
  return out;
}

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

gs::EnvConfig NumberLine(int n_max, int horizon, bool done_action) {
  gs::EnvConfig c;
  c.kind = gs::EnvKind::kNumberLine;
  c.n_min = 0;
  c.n_max = n_max;
  c.horizon = horizon;
  c.done_action = done_action;
  return c;
}

gs::PolicyConfig Lambda1() {
  gs::PolicyConfig p;
  p.lambda = 1.0;
  return p;
}

gs::TrainerConfig Warmup(int tasks) {
  gs::TrainerConfig t;
  t.tasks = tasks;
  t.lr_initial = 1e-3;
  t.lr_peak = 1e-2;
  t.lr_final = 1e-4;
  t.lr_peak_step = 100;
  return t;
}

gs::TrainerConfig Flat(int tasks, double lr) {
  gs::TrainerConfig t;
  t.tasks = tasks;
  t.lr_initial = lr;
  t.lr_peak = lr;
  t.lr_final = lr;
  t.lr_peak_step = 0;
  return t;
}

void SftInit(gs::Policy& policy, const gs::EnvConfig& env, std::uint64_t seed) {
  gs::SftConfig sft;
  sft.episodes = 200;
  sft.epochs = 10;
  gs::Rng rng = gs::MakeRng({seed, 0x5f71});
  const auto data = gs::BuildSftDataset(env, sft.episodes, policy.vocabulary(),
                                        policy.config().cot_length, rng);
  gs::SftTrain(policy, data, sft, seed);
}

// 1. Loss gradients against central differences.
Outcome GradientCorrectness() {
  double worst = 0.0;
  int instances = 0;
  for (auto kind : {gs::LossKind::kVarTB, gs::LossKind::kSubTB, gs::LossKind::kDB}) {
    for (int i = 0; i < 5; ++i) {
      const auto env_cfg = NumberLine(2 + i % 2, 4 + i % 3, true);
      auto env = gs::MakeEnvironment(env_cfg);
      gs::PolicyConfig p;
      p.embedding_dim = 4;
      p.hidden_dim = 6;
      p.cot_length = i % 2;
      p.cot_vocab = 3;
      p.lambda = 0.2 + 0.2 * i;
      p.init_scale = 1.0;
      auto policy = gs::MakeRecurrentPolicy(*env, p, 1000 + i);
      gs::Rng rng = gs::MakeRng({77, static_cast<std::uint64_t>(i)});
      std::vector<gs::Trajectory> batch;
      for (int k = 0; k < 4; ++k) batch.push_back(gs::Rollout(*policy, *env, rng(), rng));
      worst = std::max(worst, gs::GradCheck(kind, *policy, *env, batch, 1e-5));
      ++instances;
    }
  }
  return {worst <= 1e-4,
          "max relative error " + Fmt(worst) + " over " +
              std::to_string(instances) + " instances"};
}

// Leaf choice with fixed rewards, then an explicit [DONE].
class TwoLevelEnv : public gs::Environment {
 public:
  explicit TwoLevelEnv(std::vector<double> rewards)
      : Environment(Config()), rewards_(std::move(rewards)) {}
  std::vector<std::string> ActionNames() const override {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < rewards_.size(); ++i) out.push_back("x" + std::to_string(i));
    return out;
  }
  std::vector<std::string> InputTokenUniverse() const override { return {}; }
  gs::EnvStep Step(gs::Token a) override {
    RequireAdmissible(a);
    gs::EnvStep out;
    if (a.id == 0) {
      done_ = true;
      out.reward = PrefixValue();
    } else {
      chosen_ = a.id - 1;
    }
    out.done = done_;
    out.observation = Observe();
    out.admissible = Admissible();
    return out;
  }
  std::unique_ptr<gs::Environment> Clone() const override {
    return std::make_unique<TwoLevelEnv>(*this);
  }
  bool deterministic() const override { return true; }
  int NumTasks() const override { return 1; }
  gs::ResetResult ResetToTask(int) override {
    chosen_ = -1;
    done_ = false;
    return {"pick", Observe(), Admissible()};
  }
  gs::ShapedReward PrefixReward(const gs::Trajectory& prefix) const override {
    const auto c = prefix.final_observation.Get("chosen");
    return gs::ShapedReward(c < 0 ? 1.0 : rewards_[c]);
  }
  bool Success(const gs::Trajectory& t) const override { return t.terminated; }
  double RawReturn(const gs::Trajectory&) const override { return 0.0; }

 private:
  static gs::EnvConfig Config() {
    gs::EnvConfig c = NumberLine(1, 2, true);
    return c;
  }
  double PrefixValue() const { return chosen_ < 0 ? 1.0 : rewards_[chosen_]; }
  std::vector<gs::Token> Admissible() const override {
    if (done_) return {};
    if (chosen_ >= 0) return {gs::Token{0}};
    std::vector<gs::Token> out = {gs::Token{0}};
    for (std::size_t i = 0; i < rewards_.size(); ++i) {
      out.push_back(gs::Token{static_cast<int>(i) + 1});
    }
    return out;
  }
  gs::Observation Observe() const { return gs::Observation{{{"chosen", chosen_}}}; }
  std::vector<double> rewards_;
  int chosen_ = -1;
  bool done_ = false;
};

// 2. Losses vanish on analytically flow-matched policies.
Outcome ZeroLoss() {
  std::vector<std::unique_ptr<gs::Environment>> envs;
  envs.push_back(std::make_unique<TwoLevelEnv>(std::vector<double>{1.0, 3.0}));
  envs.push_back(std::make_unique<TwoLevelEnv>(std::vector<double>{0.5, 2.0, 7.0}));
  envs.push_back(gs::MakeEnvironment(NumberLine(1, 2, true)));
  envs.push_back(gs::MakeEnvironment(NumberLine(2, 2, true)));
  double worst = 0.0;
  for (const auto& env : envs) {
    const auto table = gs::EnumerateTarget(*env);
    const gs::Vocabulary vocab(env->ActionNames(), 0);
    const auto policy = gs::BuildFlowMatchedPolicy(table, vocab, gs::PolicyConfig{});
    std::map<int, std::vector<gs::Trajectory>> by_task;
    for (const auto& e : table.entries) by_task[e.task].push_back(e.trajectory);
    for (const auto& [task, trajs] : by_task) {
      worst = std::max(worst, gs::EvaluateLoss(gs::LossKind::kVarTB, *policy, *env, trajs));
      for (const auto& t : trajs) {
        const std::vector<gs::Trajectory> one = {t};
        worst = std::max(worst, gs::EvaluateLoss(gs::LossKind::kSubTB, *policy, *env, one));
        worst = std::max(worst, gs::EvaluateLoss(gs::LossKind::kDB, *policy, *env, one));
      }
    }
  }
  return {worst <= 1e-12, "max loss " + Fmt(worst) + " over 4 trees"};
}

// 3. Reward shaping values.
Outcome Shaping() {
  const bool ok = gs::ShapeNumberLine(5, 5, 100).value() == 100.0 &&
                  gs::ShapeNumberLine(5, 0, 100).value() == 100.0 / 6.0 &&
                  gs::ShapeBlackjack(-1, 1e-10).value() == 1e-10 &&
                  gs::ShapeBlackjack(0, 1e-10).value() == 10.0 &&
                  gs::ShapeBlackjack(1, 1e-10).value() == 20.0;
  return {ok, "exact equality on 5 values"};
}

// 4. Empirical trajectory distribution against the exact target.
Outcome DistributionMatching() {
  struct Run {
    gs::LossKind kind;
    bool sft;
  };
  const std::vector<Run> runs = {{gs::LossKind::kVarTB, false},
                                 {gs::LossKind::kSubTB, true},
                                 {gs::LossKind::kDB, true}};
  const auto l1 = ForEachSeed<double>(3, [&](int i) {
    const Run r = runs[static_cast<std::size_t>(i)];
    const auto env_cfg = NumberLine(2, 4, r.kind != gs::LossKind::kVarTB);
    auto env = gs::MakeEnvironment(env_cfg);
    auto policy = gs::MakeRecurrentPolicy(*env, Lambda1(), 1);
    if (r.sft) SftInit(*policy, env_cfg, 1);
    auto cfg = Warmup(10000);
    cfg.loss = r.kind;
    gs::GfnTrain(*policy, env_cfg, cfg, 1);
    const auto table = gs::EnumerateTarget(*env);
    const auto emp = gs::EmpiricalDistribution(*policy, *env, 50000, 99);
    return gs::L1Distance(emp, gs::TargetDistribution(table));
  });
  const bool ok = std::all_of(l1.begin(), l1.end(), [](double v) { return v <= 0.05; });
  return {ok, "L1 var_tb " + Fmt(l1[0]) + ", subtb+sft " + Fmt(l1[1]) +
                  ", db+sft " + Fmt(l1[2]) + " (10000 updates, 50000 samples)"};
}

// 5. SFT initialization helps SubTB and DB at equal budget.
Outcome SftDirection() {
  const auto env_cfg = NumberLine(3, 6, true);
  const int seeds = 4;
  std::string detail;
  bool ok = true;
  for (auto kind : {gs::LossKind::kSubTB, gs::LossKind::kDB}) {
    const auto wins = ForEachSeed<std::pair<double, double>>(seeds, [&](int s) {
      std::pair<double, double> rates;
      for (bool sft : {false, true}) {
        auto env = gs::MakeEnvironment(env_cfg);
        auto policy = gs::MakeRecurrentPolicy(*env, Lambda1(), s);
        if (sft) SftInit(*policy, env_cfg, s);
        auto cfg = Warmup(200);
        cfg.loss = kind;
        gs::GfnTrain(*policy, env_cfg, cfg, s);
        const auto trajs = gs::SampleTrajectories(*policy, *env, 4000, 500 + s);
        (sft ? rates.second : rates.first) = gs::SuccessRate(trajs, *env);
      }
      return rates;
    });
    int better = 0;
    std::string per;
    for (const auto& [without, with] : wins) {
      better += with >= without;
      per += " " + Fmt(with) + "/" + Fmt(without);
    }
    ok = ok && 2 * better > seeds;
    detail += std::string(gs::LossKindName(kind)) + " " + std::to_string(better) +
              "/" + std::to_string(seeds) + " (sft/none:" + per + ") ";
  }
  return {ok, detail + "at 200 updates"};
}

// 6. Mode coverage on an ambiguous sequence, against policy gradient.
Outcome Diversity() {
  gs::EnvConfig env_cfg;
  env_cfg.kind = gs::EnvKind::kSequencePattern;
  env_cfg.fixed_sequence = {1, 2, 3};
  struct Result {
    double freq4 = 0.0;
    double freq5 = 0.0;
    double div_gfn = 0.0;
    double div_pg = 0.0;
  };
  const auto res = ForEachSeed<Result>(4, [&](int s) {
    auto env = gs::MakeEnvironment(env_cfg);
    const auto& sp = static_cast<const gs::SequencePatternEnv&>(*env);
    Result r;
    auto gfn = gs::MakeRecurrentPolicy(*env, gs::PolicyConfig{}, s);
    gs::GfnTrain(*gfn, env_cfg, Flat(2000, 1e-2), s);
    const auto draws = gs::SampleTrajectories(*gfn, *env, 10000, 700 + s);
    for (const auto& t : draws) {
      const auto v = sp.ValueOf(t.steps.back().action);
      r.freq4 += v == 4 ? 1e-4 : 0.0;
      r.freq5 += v == 5 ? 1e-4 : 0.0;
    }
    auto pg = gs::MakeRecurrentPolicy(*env, gs::PolicyConfig{}, s);
    auto pg_cfg = Flat(2000, 1e-2);
    pg_cfg.algorithm = gs::Algorithm::kPolicyGradient;
    gs::PgBaselineTrain(*pg, env_cfg, pg_cfg, s);
    r.div_gfn = gs::DivAtN(gs::DistinctSuccesses(*gfn, *env, 16, 16, 900 + s));
    r.div_pg = gs::DivAtN(gs::DistinctSuccesses(*pg, *env, 16, 16, 900 + s));
    return r;
  });
  int balanced = 0;
  int div_wins = 0;
  std::string per;
  for (const auto& r : res) {
    balanced += r.freq4 >= 0.4 && r.freq4 <= 0.6 && r.freq5 >= 0.4 && r.freq5 <= 0.6;
    div_wins += r.div_gfn >= r.div_pg;
    per += " [" + Fmt(r.freq4) + "," + Fmt(r.freq5) + " div " + Fmt(r.div_gfn) +
           " vs " + Fmt(r.div_pg) + "]";
  }
  return {balanced >= 3 && div_wins >= 3,
          "modes balanced " + std::to_string(balanced) + "/4, Div@16 >= pg " +
              std::to_string(div_wins) + "/4;" + per};
}

// Updates until the exact policy distribution is within L1 0.1 of the target.
long UpdatesToL1(const gs::EnvConfig& env_cfg, bool off_policy, int seed,
                 long budget) {
  auto env = gs::MakeEnvironment(env_cfg);
  const auto table = gs::EnumerateTarget(*env);
  auto policy = gs::MakeRecurrentPolicy(*env, Lambda1(), seed);
  auto cfg = Warmup(static_cast<int>(budget));
  cfg.off_policy = off_policy;
  long reached = -1;
  gs::TrainHooks hooks;
  hooks.on_update = [&](long step, const gs::Policy& p) {
    if (step % 50 != 0) return true;
    if (gs::ExactPolicyL1(p, table) <= 0.1) {
      reached = step;
      return false;
    }
    return true;
  };
  gs::GfnTrain(*policy, env_cfg, cfg, seed, hooks);
  return reached < 0 ? budget + 1 : reached;
}

// 7. Oracle injection speeds up convergence.
Outcome OffPolicyDirection() {
  const auto env_cfg = NumberLine(2, 4, false);
  const long budget = 15000;
  const auto res = ForEachSeed<std::pair<long, long>>(4, [&](int s) {
    return std::make_pair(UpdatesToL1(env_cfg, true, s, budget),
                          UpdatesToL1(env_cfg, false, s, budget));
  });
  int better = 0;
  std::string per;
  for (const auto& [on, off] : res) {
    better += on <= off;
    per += " " + std::to_string(on) + "/" + std::to_string(off);
  }
  return {2 * better > 4, "injection not slower in " + std::to_string(better) +
                              "/4 seeds (updates with/without:" + per + ")"};
}

// 8. Metric formulas and table normalization.
Outcome Metrics() {
  bool ok = gs::DivAtN(std::vector<int>{2, 0, 1}) == 1.5;
  auto env = gs::MakeEnvironment(NumberLine(5, 10, false));
  std::vector<gs::Trajectory> trajs(4);
  const int current[] = {3, 2, 0, 1};
  const int target[] = {3, 2, 0, 4};
  for (int i = 0; i < 4; ++i) {
    trajs[i].terminated = true;
    trajs[i].final_observation =
        gs::Observation{{{"current", current[i]}, {"target", target[i]}}};
  }
  ok = ok && gs::SuccessRate(trajs, *env) == 0.75;
  double worst = 0.0;
  std::vector<gs::EnvConfig> configs = {NumberLine(1, 2, false), NumberLine(2, 4, false),
                                        NumberLine(2, 4, true), NumberLine(3, 5, true)};
  gs::EnvConfig sp;
  sp.kind = gs::EnvKind::kSequencePattern;
  configs.push_back(sp);
  sp.done_action = true;
  configs.push_back(sp);
  for (const auto& c : configs) {
    const auto table = gs::EnumerateTarget(c);
    double total = 0.0;
    for (const auto& e : table.entries) total += e.probability;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  ok = ok && worst <= 1e-9;
  return {ok, "div_at_n, success_rate exact; max |sum p - 1| " + Fmt(worst)};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gflowseq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return gs::cli::Main(static_cast<int>(argv.size()), argv.data());
}

// 9. Byte-identical outputs for repeated invocations.
Outcome Determinism() {
  const auto root = fs::temp_directory_path() / "gflowseq_acceptance";
  fs::remove_all(root);
  int identical = 0;
  int compared = 0;
  for (const char* name : {"smoke.json", "sequence_pattern_pg.json"}) {
    const std::string config = std::string(GFLOWSEQ_CONFIG_DIR) + "/" + name;
    auto cfg = gs::LoadRunConfig(config);
    cfg.trainer.tasks = std::min(cfg.trainer.tasks, 50);
    cfg.eval.samples = std::min(cfg.eval.samples, 2000);
    const auto cfg_path = root / (std::string("cfg_") + name);
    fs::create_directories(root);
    std::ofstream(cfg_path) << gs::RunConfigToJson(cfg);
    std::vector<fs::path> dirs = {root / (std::string(name) + ".a"),
                                  root / (std::string(name) + ".b")};
    for (const auto& d : dirs) {
      if (Cli({"train", "--config", cfg_path.string(), "--out", d.string()}) != 0 ||
          Cli({"eval", "--config", cfg_path.string(), "--out", d.string(),
               "--checkpoint", (d / "policy").string()}) != 0) {
        return {false, std::string("command failed for ") + name};
      }
    }
    for (const char* csv : {"metrics.csv", "eval.csv"}) {
      ++compared;
      const auto a = Slurp(dirs[0] / csv);
      identical += !a.empty() && a == Slurp(dirs[1] / csv);
    }
  }
  fs::remove_all(root);
  return {identical == compared, std::to_string(identical) + "/" +
                                     std::to_string(compared) +
                                     " CSV files byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", GradientCorrectness},
      {"zero loss on flow-matched policies", ZeroLoss},
      {"reward shaping", Shaping},
      {"distribution matching", DistributionMatching},
      {"sft initialization direction", SftDirection},
      {"diversity", Diversity},
      {"off-policy direction", OffPolicyDirection},
      {"metric formulas", Metrics},
      {"determinism", Determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    std::printf("criterion %d (%s): %s  %s [%.1fs]\n", id, criteria[i].first,
                o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
