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
#include <filesystem>
#include <limits>
#include <set>
#include <string>

#include "doctest.h"
#include "gflowseq/error.h"
#include "gflowseq/rng.h"
#include "gflowseq/trajectory.h"
#include "test_util.h"

namespace gs = gflowseq;
using gs::testing::NumberLineConfig;
using gs::testing::RandomRollout;

namespace {

gs::Trajectory ThreeSteps() {
  gs::NumberLineEnv env(NumberLineConfig(0, 5, 10, true));
  env.ResetTo(3, 0);
  gs::Trajectory traj;
  traj.goal = "NL target=3";
  gs::Observation obs{{{"current", 0}, {"target", 3}}};
  std::vector<gs::Token> adm = env.current_admissible();
  for (gs::Token a : {gs::NumberLineEnv::kPlus, gs::NumberLineEnv::kPlus,
                      gs::NumberLineEnv::kPlus}) {
    gs::StepRecord s{obs, adm, {}, a, 0.0};
    const auto st = env.Step(a);
    traj.steps.push_back(s);
    obs = st.observation;
    adm = st.admissible;
  }
  traj.terminated = true;
  traj.terminal_reward = 100.0;
  traj.final_observation = obs;
  traj.final_admissible = adm;
  return traj;
}

gs::Vocabulary NlVocab(int cot = 0) { return gs::Vocabulary({"+", "-"}, cot); }

}  // namespace

TEST_CASE("vocabulary layout") {
  const auto v = NlVocab(2);
  CHECK(v.size() == 5);
  CHECK(v.Name(v.done()) == "[DONE]");
  CHECK(v.Name(v.action(0)) == "+");
  CHECK(v.IsCot(v.cot(1)));
  CHECK_FALSE(v.IsAction(v.cot(0)));
  CHECK(v.Find("-") == v.action(1));
  CHECK_THROWS_AS(v.Find("*"), gs::DataCorruptionError);
}

TEST_CASE("prefix at zero keeps only the goal") {
  const auto traj = ThreeSteps();
  const auto p = gs::TrajectoryPrefix(traj, 0);
  CHECK(p.goal == traj.goal);
  CHECK(p.steps.empty());
  CHECK_FALSE(p.terminated);
  CHECK(p.final_observation == traj.steps[0].observation);
}

TEST_CASE("full prefix of a finished trajectory is the trajectory") {
  const auto traj = ThreeSteps();
  CHECK(gs::TrajectoryPrefix(traj, 3) == traj);
}

TEST_CASE("prefix of two steps matches a manual slice") {
  const auto traj = ThreeSteps();
  const auto p = gs::TrajectoryPrefix(traj, 2);
  REQUIRE(p.steps.size() == 2);
  CHECK(p.steps[0] == traj.steps[0]);
  CHECK(p.steps[1] == traj.steps[1]);
  CHECK_FALSE(p.terminated);
  CHECK(p.terminal_reward == 0.0);
  CHECK(p.final_observation == traj.steps[2].observation);
  CHECK(p.final_admissible == traj.steps[2].admissible);
  CHECK_THROWS_AS(gs::TrajectoryPrefix(traj, 4), gs::RangeError);
}

TEST_CASE("prefix plus remaining steps rebuilds the trajectory") {
  gs::NumberLineEnv env(NumberLineConfig(0, 4, 8, true));
  gs::Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const auto traj = RandomRollout(env, k, rng);
    for (std::size_t i = 0; i <= traj.size(); ++i) {
      auto p = gs::TrajectoryPrefix(traj, i);
      for (std::size_t j = i; j < traj.size(); ++j) p.steps.push_back(traj.steps[j]);
      p.terminated = traj.terminated;
      p.terminal_reward = traj.terminal_reward;
      p.final_observation = traj.final_observation;
      p.final_admissible = traj.final_admissible;
      CHECK(p == traj);
    }
  }
}

TEST_CASE("history text of an empty trajectory") {
  gs::Trajectory t;
  t.goal = "NL target=3";
  t.final_observation = gs::Observation{{{"current", 1}, {"target", 3}}};
  const auto v = NlVocab();
  const auto text = gs::CanonicalHistoryText(t, v);
  CHECK(text.find("NL target=3") != std::string::npos);
  CHECK(text.find("State 0") != std::string::npos);
  CHECK(text.find("State 1") == std::string::npos);
  CHECK(text == gs::CanonicalHistoryText(t, v));
}

TEST_CASE("history text separates a single changed action") {
  const auto v = NlVocab();
  auto a = ThreeSteps();
  auto b = a;
  b.steps[1].action = gs::NumberLineEnv::kMinus;
  CHECK(gs::CanonicalHistoryText(a, v) != gs::CanonicalHistoryText(b, v));
}

TEST_CASE("history text is injective over random trajectories") {
  const auto v = NlVocab(3);
  gs::Rng rng(11);
  std::set<std::string> records;
  std::set<std::string> texts;
  for (int k = 0; k < 10000; ++k) {
    gs::Trajectory t;
    t.goal = "NL target=" + std::to_string(gs::UniformIndex(rng, 4));
    const int len = static_cast<int>(gs::UniformIndex(rng, 5));
    for (int s = 0; s < len; ++s) {
      gs::StepRecord r;
      r.observation.fields = {
          {"current", static_cast<std::int64_t>(gs::UniformIndex(rng, 3))}};
      r.admissible = {v.done(), v.action(0), v.action(1)};
      const int ncot = static_cast<int>(gs::UniformIndex(rng, 2));
      for (int c = 0; c < ncot; ++c) {
        r.cot.push_back(v.cot(static_cast<int>(gs::UniformIndex(rng, 3))));
      }
      r.action = gs::Token{static_cast<int>(gs::UniformIndex(rng, 3))};
      t.steps.push_back(r);
    }
    t.final_observation.fields = {
        {"current", static_cast<std::int64_t>(gs::UniformIndex(rng, 3))}};
    t.terminated = gs::UniformIndex(rng, 2) == 1;
    if (!t.terminated) t.final_admissible = {v.done(), v.action(0)};
    // Rewards are not part of the history.
    records.insert(gs::ToJsonLine(t, v));
    texts.insert(gs::CanonicalHistoryText(t, v));
  }
  CHECK(records.size() > 5000);
  CHECK(texts.size() == records.size());
}

TEST_CASE("trajectory key ignores CoT") {
  const auto v = NlVocab(2);
  auto a = ThreeSteps();
  auto b = a;
  b.steps[0].cot = {v.cot(1)};
  CHECK(gs::TrajectoryKey(a, v) == gs::TrajectoryKey(b, v));
  b.steps[2].action = gs::NumberLineEnv::kMinus;
  CHECK(gs::TrajectoryKey(a, v) != gs::TrajectoryKey(b, v));
}

TEST_CASE("json lines round trip bit-exactly") {
  const auto v = NlVocab(2);
  auto t = ThreeSteps();
  t.steps[0].reward = 0.1;
  t.steps[1].reward = 1.0 / 3.0;
  t.steps[1].cot = {v.cot(0), v.cot(1)};
  t.steps[2].reward = std::numeric_limits<double>::denorm_min();
  t.terminal_reward = 1e-300;
  const auto line = gs::ToJsonLine(t, v);
  CHECK(line.find('\n') == std::string::npos);
  const auto back = gs::FromJsonLine(line, v);
  CHECK(back == t);
  CHECK(gs::ToJsonLine(back, v) == line);

  const auto path =
      (std::filesystem::temp_directory_path() / "gflowseq_core_rt.jsonl")
          .string();
  std::vector<gs::Trajectory> many;
  gs::NumberLineEnv env(NumberLineConfig(0, 3, 6, true));
  gs::Rng rng(3);
  for (int k = 0; k < 20; ++k) many.push_back(RandomRollout(env, k, rng));
  gs::WriteJsonLines(path, many, v);
  CHECK(gs::ReadJsonLines(path, v) == many);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt json lines are rejected") {
  const auto v = NlVocab();
  const auto line = gs::ToJsonLine(ThreeSteps(), v);
  CHECK_THROWS_AS(gs::FromJsonLine("{not json", v), gs::DataCorruptionError);
  CHECK_THROWS_AS(gs::FromJsonLine("{}", v), gs::DataCorruptionError);
  std::string bad = line;
  bad.replace(bad.find("\"+\""), 3, "\"?\"");
  CHECK_THROWS_AS(gs::FromJsonLine(bad, v), gs::DataCorruptionError);
  CHECK_THROWS_AS(gs::ReadJsonLines("/nonexistent/x.jsonl", v), gs::IoError);
}

TEST_CASE("shaped rewards must be positive and finite") {
  CHECK(gs::ShapedReward(1e-10).value() == 1e-10);
  CHECK_THROWS_AS(gs::ShapedReward(0.0), gs::ShapingError);
  CHECK_THROWS_AS(gs::ShapedReward(-1.0), gs::ShapingError);
  CHECK_THROWS_AS(gs::ShapedReward(std::nan("")), gs::ShapingError);
  CHECK_THROWS_AS(gs::ShapedReward{std::numeric_limits<double>::infinity()}, gs::ShapingError);
}

TEST_CASE("seed mixing") {
  CHECK(gs::MixSeed({1, 2}) == gs::MixSeed({1, 2}));
  CHECK(gs::MixSeed({1, 2}) != gs::MixSeed({2, 1}));
  CHECK(gs::MixSeed({1}) != gs::MixSeed({1, 0}));
  gs::Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = gs::UniformUnit(rng);
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(gs::UniformIndex(rng, 7) < 7);
  }
}
