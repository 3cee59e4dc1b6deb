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

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices of doubles. A Tape records nodes in creation order, which is a
// topological order; Backward walks it in reverse.

#ifndef GFLOWSEQ_AUTODIFF_H_
#define GFLOWSEQ_AUTODIFF_H_

#include <cstdint>
#include <span>
#include <vector>

namespace gflowseq::ad {

struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
  Tensor(int r, int c, std::vector<double> values);

  static Tensor Scalar(double v) { return Tensor(1, 1, v); }
  static Tensor Row(std::vector<double> values);

  std::size_t size() const { return data.size(); }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  bool SameShape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }
  bool operator==(const Tensor&) const = default;
};

class Tape;

// Handle to a node on a tape. Cheap to copy.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  // Value of a 1x1 node; throws ShapeError otherwise.
  double scalar() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class Op : std::uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kMatMul,
  kTanh,
  kRelu,
  kLogSoftmax,
  kGather,
  kGatherRows,
  kSumRows,
  kSum,
  kMean,
  kSquare,
  kLog,
  kExp,
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input; its gradient is available after Backward.
  Var Leaf(Tensor value);
  // Non-differentiable input.
  Var Constant(Tensor value);
  Var Constant(double v) { return Constant(Tensor::Scalar(v)); }

  // Populates adjoints of every node reachable from `output`, which must be
  // 1x1 (ContractError otherwise). May be called once per tape.
  void Backward(Var output);
  // Adjoint of a node after Backward; zeros if it received no gradient.
  const Tensor& Grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  void Reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  friend class Var;
  friend Var Push(Tape&, Op, Tensor, int, int, std::vector<int>, double);

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    std::vector<int> index;
    double scalar = 0.0;
    Tensor value;
    Tensor grad;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Elementwise, operands must share a shape.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double c);
Var AddScalar(Var a, double c);
// (m x k) * (k x n).
Var MatMul(Var a, Var b);
Var Tanh(Var a);
Var Relu(Var a);
// Over all elements of a row vector, max-subtracted.
Var LogSoftmax(Var a);
// Row vector of the selected flat elements.
Var Gather(Var a, std::span<const int> index);
// Element at a flat index as a 1x1 node.
Var Pick(Var a, int index);
// Matrix of the selected rows (rows may repeat).
Var GatherRows(Var a, std::span<const int> rows);
// Row vector of column sums.
Var SumRows(Var a);
Var Sum(Var a);
Var Mean(Var a);
Var Square(Var a);
Var Log(Var a);
Var Exp(Var a);

inline Var operator+(Var a, Var b) { return Add(a, b); }
inline Var operator-(Var a, Var b) { return Sub(a, b); }
inline Var operator*(Var a, Var b) { return Mul(a, b); }

}  // namespace gflowseq::ad

#endif  // GFLOWSEQ_AUTODIFF_H_
