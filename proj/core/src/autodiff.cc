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

#include "gflowseq/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "gflowseq/error.h"

namespace gflowseq::ad {
namespace {

std::string ShapeStr(const Tensor& t) {
  return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

void RequireSameShape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.SameShape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + ShapeStr(a) +
                     " vs " + ShapeStr(b));
  }
}

Tape& TapeOf(Var a) {
  if (!a.valid()) throw ContractError("use of an unbound Var");
  return *a.tape();
}

Tape& TapeOf(Var a, Var b) {
  if (a.tape() != b.tape()) throw ContractError("operands on different tapes");
  return TapeOf(a);
}

}  // namespace

Tensor::Tensor(int r, int c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<std::size_t>(r) * c) {
    throw ShapeError("tensor data size does not match " + std::to_string(r) +
                     "x" + std::to_string(c));
  }
}

Tensor Tensor::Row(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return Tensor(1, n, std::move(values));
}

const Tensor& Var::value() const {
  if (!valid()) throw ContractError("use of an unbound Var");
  return tape_->nodes_[id_].value;
}

double Var::scalar() const {
  const Tensor& v = value();
  if (v.rows != 1 || v.cols != 1) {
    throw ShapeError("expected 1x1, got " + ShapeStr(v));
  }
  return v.data[0];
}

Var Push(Tape& tape, Op op, Tensor value, int a, int b,
         std::vector<int> index, double scalar) {
  Tape::Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.index = std::move(index);
  n.scalar = scalar;
  n.value = std::move(value);
  tape.nodes_.push_back(std::move(n));
  return Var(&tape, static_cast<int>(tape.nodes_.size()) - 1);
}

Var Tape::Leaf(Tensor value) {
  return Push(*this, Op::kLeaf, std::move(value), -1, -1, {}, 0.0);
}

Var Tape::Constant(Tensor value) {
  return Push(*this, Op::kConstant, std::move(value), -1, -1, {}, 0.0);
}

Var Add(Var a, Var b) {
  Tape& t = TapeOf(a, b);
  RequireSameShape("Add", a.value(), b.value());
  Tensor out = a.value();
  const auto& bv = b.value().data;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv[i];
  return Push(t, Op::kAdd, std::move(out), a.id(), b.id(), {}, 0.0);
}

Var Sub(Var a, Var b) {
  Tape& t = TapeOf(a, b);
  RequireSameShape("Sub", a.value(), b.value());
  Tensor out = a.value();
  const auto& bv = b.value().data;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv[i];
  return Push(t, Op::kSub, std::move(out), a.id(), b.id(), {}, 0.0);
}

Var Mul(Var a, Var b) {
  Tape& t = TapeOf(a, b);
  RequireSameShape("Mul", a.value(), b.value());
  Tensor out = a.value();
  const auto& bv = b.value().data;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv[i];
  return Push(t, Op::kMul, std::move(out), a.id(), b.id(), {}, 0.0);
}

Var Scale(Var a, double c) {
  Tape& t = TapeOf(a);
  Tensor out = a.value();
  for (double& x : out.data) x *= c;
  return Push(t, Op::kScale, std::move(out), a.id(), -1, {}, c);
}

Var AddScalar(Var a, double c) {
  Tape& t = TapeOf(a);
  Tensor out = a.value();
  for (double& x : out.data) x += c;
  return Push(t, Op::kAddScalar, std::move(out), a.id(), -1, {}, c);
}

Var MatMul(Var a, Var b) {
  Tape& t = TapeOf(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols != bv.rows) {
    throw ShapeError("MatMul: inner dimensions differ " + ShapeStr(av) +
                     " * " + ShapeStr(bv));
  }
  Tensor out(av.rows, bv.cols);
  for (int i = 0; i < av.rows; ++i) {
    double* orow = &out.data[static_cast<std::size_t>(i) * bv.cols];
    for (int k = 0; k < av.cols; ++k) {
      const double aik = av.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = &bv.data[static_cast<std::size_t>(k) * bv.cols];
      for (int j = 0; j < bv.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return Push(t, Op::kMatMul, std::move(out), a.id(), b.id(), {}, 0.0);
}

Var Tanh(Var a) {
  Tape& t = TapeOf(a);
  Tensor out = a.value();
  for (double& x : out.data) x = std::tanh(x);
  return Push(t, Op::kTanh, std::move(out), a.id(), -1, {}, 0.0);
}

Var Relu(Var a) {
  Tape& t = TapeOf(a);
  Tensor out = a.value();
  for (double& x : out.data) x = x > 0.0 ? x : 0.0;
  return Push(t, Op::kRelu, std::move(out), a.id(), -1, {}, 0.0);
}

Var LogSoftmax(Var a) {
  Tape& t = TapeOf(a);
  const Tensor& av = a.value();
  if (av.rows != 1 || av.cols == 0) {
    throw ShapeError("LogSoftmax: expected a non-empty row vector, got " +
                     ShapeStr(av));
  }
  const double mx = *std::max_element(av.data.begin(), av.data.end());
  double z = 0.0;
  for (double x : av.data) z += std::exp(x - mx);
  const double lse = mx + std::log(z);
  Tensor out = av;
  for (double& x : out.data) x -= lse;
  return Push(t, Op::kLogSoftmax, std::move(out), a.id(), -1, {}, 0.0);
}

Var Gather(Var a, std::span<const int> index) {
  Tape& t = TapeOf(a);
  const Tensor& av = a.value();
  Tensor out(1, static_cast<int>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= av.size()) {
      throw ShapeError("Gather: index " + std::to_string(index[i]) +
                       " outside " + ShapeStr(av));
    }
    out.data[i] = av.data[index[i]];
  }
  return Push(t, Op::kGather, std::move(out), a.id(), -1,
              std::vector<int>(index.begin(), index.end()), 0.0);
}

Var Pick(Var a, int index) {
  const int idx[1] = {index};
  return Gather(a, idx);
}

Var GatherRows(Var a, std::span<const int> rows) {
  Tape& t = TapeOf(a);
  const Tensor& av = a.value();
  Tensor out(static_cast<int>(rows.size()), av.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows) {
      throw ShapeError("GatherRows: row " + std::to_string(rows[i]) +
                       " outside " + ShapeStr(av));
    }
    std::copy_n(&av.data[static_cast<std::size_t>(rows[i]) * av.cols], av.cols,
                &out.data[i * av.cols]);
  }
  return Push(t, Op::kGatherRows, std::move(out), a.id(), -1,
              std::vector<int>(rows.begin(), rows.end()), 0.0);
}

Var SumRows(Var a) {
  Tape& t = TapeOf(a);
  const Tensor& av = a.value();
  Tensor out(1, av.cols);
  for (int i = 0; i < av.rows; ++i) {
    for (int j = 0; j < av.cols; ++j) out.data[j] += av.at(i, j);
  }
  return Push(t, Op::kSumRows, std::move(out), a.id(), -1, {}, 0.0);
}

Var Sum(Var a) {
  Tape& t = TapeOf(a);
  double s = 0.0;
  for (double x : a.value().data) s += x;
  return Push(t, Op::kSum, Tensor::Scalar(s), a.id(), -1, {}, 0.0);
}

Var Mean(Var a) {
  Tape& t = TapeOf(a);
  const auto& d = a.value().data;
  if (d.empty()) throw ShapeError("Mean: empty tensor");
  double s = 0.0;
  for (double x : d) s += x;
  return Push(t, Op::kMean, Tensor::Scalar(s / d.size()), a.id(), -1, {}, 0.0);
}

Var Square(Var a) {
  Tape& t = TapeOf(a);
  Tensor out = a.value();
  for (double& x : out.data) x *= x;
  return Push(t, Op::kSquare, std::move(out), a.id(), -1, {}, 0.0);
}

Var Log(Var a) {
  Tape& t = TapeOf(a);
  Tensor out = a.value();
  for (double& x : out.data) x = std::log(x);
  return Push(t, Op::kLog, std::move(out), a.id(), -1, {}, 0.0);
}

Var Exp(Var a) {
  Tape& t = TapeOf(a);
  Tensor out = a.value();
  for (double& x : out.data) x = std::exp(x);
  return Push(t, Op::kExp, std::move(out), a.id(), -1, {}, 0.0);
}

void Tape::Backward(Var output) {
  if (output.tape() != this) throw ContractError("output not on this tape");
  const Tensor& ov = output.value();
  if (ov.rows != 1 || ov.cols != 1) {
    throw ContractError("Backward: output must be scalar, got " +
                        ShapeStr(ov));
  }
  if (backward_done_) throw ContractError("Backward called twice on a tape");
  backward_done_ = true;

  // Only nodes that depend on a leaf need adjoints.
  std::vector<char> needs(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op == Op::kLeaf) {
      needs[i] = 1;
    } else if (n.op != Op::kConstant) {
      needs[i] = (n.a >= 0 && needs[n.a]) || (n.b >= 0 && needs[n.b]);
    }
  }
  std::vector<char> reached(nodes_.size(), 0);
  for (auto& n : nodes_) n.grad = Tensor(n.value.rows, n.value.cols);
  nodes_[output.id()].grad.data[0] = 1.0;
  reached[output.id()] = 1;

  for (int i = output.id(); i >= 0; --i) {
    if (!reached[i] || !needs[i]) continue;
    Node& n = nodes_[i];
    const Tensor& g = n.grad;
    auto flow = [&](int p) -> Tensor* {
      if (p < 0 || !needs[p]) return nullptr;
      reached[p] = 1;
      return &nodes_[p].grad;
    };
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConstant:
        break;
      case Op::kAdd:
      case Op::kSub: {
        const double sb = n.op == Op::kAdd ? 1.0 : -1.0;
        if (Tensor* ga = flow(n.a)) {
          for (std::size_t k = 0; k < g.size(); ++k) ga->data[k] += g.data[k];
        }
        if (Tensor* gb = flow(n.b)) {
          for (std::size_t k = 0; k < g.size(); ++k) {
            gb->data[k] += sb * g.data[k];
          }
        }
        break;
      }
      case Op::kMul: {
        const Tensor& av = nodes_[n.a].value;
        const Tensor& bv = nodes_[n.b].value;
        if (Tensor* ga = flow(n.a)) {
          for (std::size_t k = 0; k < g.size(); ++k) {
            ga->data[k] += g.data[k] * bv.data[k];
          }
        }
        if (Tensor* gb = flow(n.b)) {
          for (std::size_t k = 0; k < g.size(); ++k) {
            gb->data[k] += g.data[k] * av.data[k];
          }
        }
        break;
      }
      case Op::kScale:
        if (Tensor* ga = flow(n.a)) {
          for (std::size_t k = 0; k < g.size(); ++k) {
            ga->data[k] += n.scalar * g.data[k];
          }
        }
        break;
      case Op::kAddScalar:
        if (Tensor* ga = flow(n.a)) {
          for (std::size_t k = 0; k < g.size(); ++k) ga->data[k] += g.data[k];
        }
        break;
      case Op::kMatMul: {
        const Tensor& av = nodes_[n.a].value;
        const Tensor& bv = nodes_[n.b].value;
        const int m = av.rows, kk = av.cols, nn = bv.cols;
        if (Tensor* ga = flow(n.a)) {
          // dA = G * B^T
          for (int i2 = 0; i2 < m; ++i2) {
            for (int k = 0; k < kk; ++k) {
              double s = 0.0;
              for (int j = 0; j < nn; ++j) s += g.at(i2, j) * bv.at(k, j);
              ga->at(i2, k) += s;
            }
          }
        }
        if (Tensor* gb = flow(n.b)) {
          // dB = A^T * G
          for (int i2 = 0; i2 < m; ++i2) {
            for (int k = 0; k < kk; ++k) {
              const double aik = av.at(i2, k);
              if (aik == 0.0) continue;
              for (int j = 0; j < nn; ++j) gb->at(k, j) += aik * g.at(i2, j);
            }
          }
        }
        break;
      }
      case Op::kTanh:
        if (Tensor* ga = flow(n.a)) {
          for (std::size_t k = 0; k < g.size(); ++k) {
            const double y = n.value.data[k];
            ga->data[k] += g.data[k] * (1.0 - y * y);
          }
        }
        break;
      case Op::kRelu:
        if (Tensor* ga = flow(n.a)) {
          const Tensor& av = nodes_[n.a].value;
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (av.data[k] > 0.0) ga->data[k] += g.data[k];
          }
        }
        break;
      case Op::kLogSoftmax:
        if (Tensor* ga = flow(n.a)) {
          double gs = 0.0;
          for (double x : g.data) gs += x;
          for (std::size_t k = 0; k < g.size(); ++k) {
            ga->data[k] += g.data[k] - std::exp(n.value.data[k]) * gs;
          }
        }
        break;
      case Op::kGather:
        if (Tensor* ga = flow(n.a)) {
          for (std::size_t k = 0; k < n.index.size(); ++k) {
            ga->data[n.index[k]] += g.data[k];
          }
        }
        break;
      case Op::kGatherRows:
        if (Tensor* ga = flow(n.a)) {
          const int c = ga->cols;
          for (std::size_t r = 0; r < n.index.size(); ++r) {
            double* dst = &ga->data[static_cast<std::size_t>(n.index[r]) * c];
            const double* src = &g.data[r * c];
            for (int j = 0; j < c; ++j) dst[j] += src[j];
          }
        }
        break;
      case Op::kSumRows:
        if (Tensor* ga = flow(n.a)) {
          for (int r = 0; r < ga->rows; ++r) {
            for (int j = 0; j < ga->cols; ++j) ga->at(r, j) += g.data[j];
          }
        }
        break;
      case Op::kSum:
        if (Tensor* ga = flow(n.a)) {
          for (double& x : ga->data) x += g.data[0];
        }
        break;
      case Op::kMean:
        if (Tensor* ga = flow(n.a)) {
          const double s = g.data[0] / static_cast<double>(ga->size());
          for (double& x : ga->data) x += s;
        }
        break;
      case Op::kSquare:
        if (Tensor* ga = flow(n.a)) {
          const Tensor& av = nodes_[n.a].value;
          for (std::size_t k = 0; k < g.size(); ++k) {
            ga->data[k] += 2.0 * av.data[k] * g.data[k];
          }
        }
        break;
      case Op::kLog:
        if (Tensor* ga = flow(n.a)) {
          const Tensor& av = nodes_[n.a].value;
          for (std::size_t k = 0; k < g.size(); ++k) {
            ga->data[k] += g.data[k] / av.data[k];
          }
        }
        break;
      case Op::kExp:
        if (Tensor* ga = flow(n.a)) {
          for (std::size_t k = 0; k < g.size(); ++k) {
            ga->data[k] += g.data[k] * n.value.data[k];
          }
        }
        break;
    }
  }
}

const Tensor& Tape::Grad(Var v) const {
  if (v.tape() != this) throw ContractError("Var not on this tape");
  if (!backward_done_) throw ContractError("Grad before Backward");
  return nodes_[v.id()].grad;
}

}  // namespace gflowseq::ad
