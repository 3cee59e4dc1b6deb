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

#ifndef GFLOWSEQ_ERROR_H_
#define GFLOWSEQ_ERROR_H_

#include <stdexcept>
#include <string>

namespace gflowseq {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GFLOWSEQ_DEFINE_ERROR(Name)      \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

GFLOWSEQ_DEFINE_ERROR(ConfigError);
GFLOWSEQ_DEFINE_ERROR(ContractError);
GFLOWSEQ_DEFINE_ERROR(RangeError);
GFLOWSEQ_DEFINE_ERROR(ShapeError);
GFLOWSEQ_DEFINE_ERROR(ShapingError);
GFLOWSEQ_DEFINE_ERROR(DataCorruptionError);
GFLOWSEQ_DEFINE_ERROR(EmptyBufferError);
GFLOWSEQ_DEFINE_ERROR(GenerationError);
GFLOWSEQ_DEFINE_ERROR(UnsupportedEnvironmentError);
GFLOWSEQ_DEFINE_ERROR(SizeError);
GFLOWSEQ_DEFINE_ERROR(DivergenceError);
GFLOWSEQ_DEFINE_ERROR(UndefinedMetricError);
GFLOWSEQ_DEFINE_ERROR(EmptySetError);
GFLOWSEQ_DEFINE_ERROR(IoError);

#undef GFLOWSEQ_DEFINE_ERROR

}  // namespace gflowseq

#endif  // GFLOWSEQ_ERROR_H_
