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


#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gflowseq/data.h"
#include "gflowseq/error.h"
#include "gflowseq/eval.h"
#include "test_util.h"

namespace gs = gflowseq;
using gs::Token;
using gs::testing::LeafEnv;
using gs::testing::NumberLineConfig;
using gs::testing::SmallPolicy;

namespace {

double Total(const gs::ExactFlowTable& t) {
  double s = 0.0;
  for (const auto& e : t.entries) s += e.probability;
  return s;
}

std::vector<std::string> ActionNames(const gs::Trajectory& t,
                                     const gs::Vocabulary& v) {
  std::vector<std::string> out;
  for (const auto& s : t.steps) out.push_back(v.Name(s.action));
  return out;
}

gs::Trajectory Finished(std::int64_t target, std::int64_t current) {
  gs::Trajectory t;
  t.terminated = true;
  t.final_observation = gs::Observation{{{"current", current}, {"target", target}}};
  return t;
}

}  // namespace

TEST_CASE("two leaves with rewards 1 and 3") {
  LeafEnv env({1.0, 3.0}, false);
  const auto table = gs::EnumerateTarget(env);
  REQUIRE(table.entries.size() == 2);
  CHECK(table.z == 4.0);
  CHECK(table.task_z == std::vector<double>{4.0});
  const gs::Vocabulary v(env.ActionNames(), 0);
  for (const auto& e : table.entries) {
    const auto names = ActionNames(e.trajectory, v);
    CHECK(e.probability == (names[0] == "leaf0" ? 0.25 : 0.75));
  }
}

TEST_CASE("numberline over [0,1] with horizon 2 by hand") {
  const gs::Vocabulary v({"+", "-"}, 0);
  const auto table = gs::EnumerateTarget(NumberLineConfig(0, 1, 2, false));
  // Target 1 from 0: [+] 100, [-,+] 50, [-,-] 25; mirrored for target 0.
  std::map<std::pair<int, std::string>, double> expect = {
      {{1, "+"}, 100.0},  {{1, "-,+"}, 50.0}, {{1, "-,-"}, 25.0},
      {{0, "-"}, 100.0},  {{0, "+,-"}, 50.0}, {{0, "+,+"}, 25.0},
  };
  REQUIRE(table.entries.size() == expect.size());
  for (const auto& e : table.entries) {
    std::string path;
    for (const auto& n : ActionNames(e.trajectory, v)) {
      path += (path.empty() ? "" : ",") + n;
    }
    const int target =
        static_cast<int>(e.trajectory.steps[0].observation.Get("target"));
    const double r = expect.at({target, path});
    CHECK(e.reward == doctest::Approx(r).epsilon(1e-15));
    CHECK(e.probability == doctest::Approx(r / 350.0).epsilon(1e-15));
  }
  CHECK(table.z == doctest::Approx(350.0).epsilon(1e-15));

  const auto done = gs::EnumerateTarget(NumberLineConfig(0, 1, 2, true));
  // [DONE] 50, [+,DONE] 100, [-,DONE] 100/3 per task.
  CHECK(done.entries.size() == 6);
  CHECK(done.task_z[0] == doctest::Approx(50.0 + 100.0 + 100.0 / 3.0));
}

TEST_CASE("table totals") {
  for (bool d : {false, true}) {
    for (int n : {1, 2, 3}) {
      const auto table = gs::EnumerateTarget(NumberLineConfig(0, n, n + 2, d));
      CHECK(std::abs(Total(table) - 1.0) <= 1e-9);
      double z = 0.0;
      for (const auto& e : table.entries) z += e.reward;
      CHECK(table.z == doctest::Approx(z).epsilon(1e-12));
      CHECK(std::accumulate(table.task_z.begin(), table.task_z.end(), 0.0) ==
            doctest::Approx(z).epsilon(1e-12));
      CHECK(std::is_sorted(table.entries.begin(), table.entries.end(),
                           [](const auto& a, const auto& b) { return a.key < b.key; }));
    }
  }
  gs::EnvConfig sp;
  sp.kind = gs::EnvKind::kSequencePattern;
  CHECK(std::abs(Total(gs::EnumerateTarget(sp)) - 1.0) <= 1e-9);
}

TEST_CASE("enumeration does not depend on the prototype's state") {
  gs::NumberLineEnv a(NumberLineConfig(0, 2, 4, true));
  gs::NumberLineEnv b(NumberLineConfig(0, 2, 4, true));
  b.ResetTo(2, 0);
  b.Step(gs::NumberLineEnv::kPlus);
  const auto ta = gs::EnumerateTarget(a);
  const auto tb = gs::EnumerateTarget(b);
  REQUIRE(ta.entries.size() == tb.entries.size());
  for (std::size_t i = 0; i < ta.entries.size(); ++i) {
    CHECK(ta.entries[i].key == tb.entries[i].key);
    CHECK(ta.entries[i].probability == tb.entries[i].probability);
  }
}

TEST_CASE("enumeration errors") {
  gs::EnvConfig bj;
  bj.kind = gs::EnvKind::kBlackjack;
  CHECK_THROWS_AS(gs::EnumerateTarget(bj), gs::UnsupportedEnvironmentError);
  CHECK_THROWS_AS(gs::EnumerateTarget(NumberLineConfig(0, 3, 8, false), 100),
                  gs::SizeError);
}

TEST_CASE("empirical distribution of one sample") {
  gs::NumberLineEnv env(NumberLineConfig(0, 2, 4, true));
  auto policy = gs::MakeRecurrentPolicy(env, SmallPolicy(), 1);
  const auto d = gs::EmpiricalDistribution(*policy, env, 1, 3);
  REQUIRE(d.size() == 1);
  CHECK(d.begin()->second == 1.0);
  CHECK(gs::EmpiricalDistribution(*policy, env, 50, 3) ==
        gs::EmpiricalDistribution(*policy, env, 50, 3));
}

TEST_CASE("uniform policy on two symmetric leaves") {
  LeafEnv env({1.0, 1.0}, false);
  auto policy = gs::MakeRecurrentPolicy(env, SmallPolicy(), 1);
  for (auto& x : policy->mutable_parameters().tensors[4].data) x = 0.0;
  const int n = 10000;
  const auto d = gs::EmpiricalDistribution(*policy, env, n, 11);
  REQUIRE(d.size() == 2);
  const double sigma = std::sqrt(0.25 / n);
  for (const auto& [k, f] : d) CHECK(std::abs(f - 0.5) <= 3 * sigma);
}

TEST_CASE("flow-matched policy reproduces the target") {
  const auto cfg = NumberLineConfig(0, 2, 4, true);
  gs::NumberLineEnv env(cfg);
  const auto table = gs::EnumerateTarget(env);
  const gs::Vocabulary v(env.ActionNames(), 0);
  const auto policy = gs::BuildFlowMatchedPolicy(table, v, SmallPolicy());
  CHECK(gs::ExactPolicyL1(*policy, table) < 1e-12);
  const auto pd = gs::PolicyDistribution(*policy, table);
  double total = 0.0;
  for (const auto& [k, p] : pd) total += p;
  CHECK(std::abs(total - 1.0) < 1e-12);
  const auto target = gs::TargetDistribution(table);
  const auto emp = gs::EmpiricalDistribution(*policy, env, 20000, 5);
  CHECK(gs::L1Distance(emp, target) < 0.05);
  CHECK(gs::KlDivergence(target, emp) < 0.01);

  auto untrained = gs::MakeRecurrentPolicy(env, SmallPolicy(), 1);
  CHECK(gs::ExactPolicyL1(*untrained, table) > 0.3);
}

TEST_CASE("distances") {
  const gs::Distribution p = {{"a", 0.5}, {"b", 0.5}};
  const gs::Distribution q = {{"c", 1.0}};
  const gs::Distribution r = {{"a", 0.25}, {"b", 0.75}};
  CHECK(gs::L1Distance(p, p) == 0.0);
  CHECK(gs::L1Distance(p, q) == 2.0);
  CHECK(gs::L1Distance(p, r) == 0.5);
  CHECK(gs::KlDivergence(p, p) == doctest::Approx(0.0));
  CHECK(gs::KlDivergence(p, r) ==
        doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(0.5 / 0.75)));
  CHECK(gs::KlDivergence(p, q) > 10.0);
}

TEST_CASE("success rate") {
  gs::NumberLineEnv env(NumberLineConfig(0, 5, 0, false));
  const std::vector<gs::Trajectory> all = {Finished(3, 3), Finished(1, 1)};
  const std::vector<gs::Trajectory> none = {Finished(3, 2), Finished(1, 4)};
  const std::vector<gs::Trajectory> mixed = {Finished(3, 3), Finished(2, 2),
                                             Finished(0, 0), Finished(4, 1)};
  CHECK(gs::SuccessRate(all, env) == 1.0);
  CHECK(gs::SuccessRate(none, env) == 0.0);
  CHECK(gs::SuccessRate(mixed, env) == 0.75);
  CHECK_THROWS_AS(gs::SuccessRate(std::vector<gs::Trajectory>{}, env),
                  gs::EmptySetError);
}

TEST_CASE("div at n") {
  CHECK(gs::DivAtN(std::vector<int>{2, 0, 1}) == 1.5);
  CHECK(gs::DivAtN(std::vector<int>{1, 1, 1}) == 1.0);
  CHECK(gs::DivAtN(std::vector<int>{16}) == 16.0);
  CHECK_THROWS_AS(gs::DivAtN(std::vector<int>{0, 0}), gs::UndefinedMetricError);
  CHECK_THROWS_AS(gs::DivAtN(std::vector<int>{}), gs::UndefinedMetricError);
}

TEST_CASE("distinct successes count only successful sequences") {
  gs::EnvConfig cfg;
  cfg.kind = gs::EnvKind::kSequencePattern;
  cfg.fixed_sequence = {1, 2, 3};
  gs::SequencePatternEnv env(cfg);
  const auto table = gs::EnumerateTarget(env);
  const gs::Vocabulary v(env.ActionNames(), 0);
  const auto matched = gs::BuildFlowMatchedPolicy(table, v, SmallPolicy());
  const auto counts = gs::DistinctSuccesses(*matched, env, 4, 16, 1);
  CHECK(counts == std::vector<int>{2, 2, 2, 2});
  CHECK(gs::DivAtN(counts) == 2.0);

  // A policy that always picks the same valid continuation.
  const auto r = env.Reset(0);
  gs::Trajectory root;
  root.goal = r.goal;
  root.final_observation = r.observation;
  root.final_admissible = r.admissible;
  const auto key = gs::CanonicalHistoryText(root, v);
  gs::TabularPolicy greedy(SmallPolicy(), v, {key});
  std::vector<double> logits(v.size(), -50.0);
  logits[env.TokenForValue(4).id] = 50.0;
  greedy.SetLogits(key, logits);
  CHECK(gs::DistinctSuccesses(greedy, env, 3, 16, 1) == std::vector<int>{1, 1, 1});
  logits[env.TokenForValue(4).id] = -50.0;
  logits[env.TokenForValue(6).id] = 50.0;
  greedy.SetLogits(key, logits);
  CHECK(gs::DistinctSuccesses(greedy, env, 3, 16, 1) == std::vector<int>{0, 0, 0});
}
