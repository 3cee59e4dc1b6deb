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

#ifndef GFLOWSEQ_TOOLS_CLI_H_
#define GFLOWSEQ_TOOLS_CLI_H_

#include <optional>
#include <string>
#include <vector>

namespace gflowseq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct Options {
  std::string config_path;
  std::optional<unsigned long long> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  std::string checkpoint;  // eval only
};

int CmdTrain(const Options& options);
int CmdEval(const Options& options);
int CmdOracle(const Options& options);

// Parses argv and dispatches; returns the process exit code.
int Main(int argc, const char* const* argv);

}  // namespace gflowseq::cli

#endif  // GFLOWSEQ_TOOLS_CLI_H_
