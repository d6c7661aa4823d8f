// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_AUTODIFF_TAPE_H_
#define MUTE_AUTODIFF_TAPE_H_

#include <cstdint>
#include <deque>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "autodiff/tensor.h"

namespace mute::ad {

enum class Op : std::uint8_t {
  kParam,
  kConstant,
  kMatMul,
  kMatVec,
  kTranspose,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRowVec,
  kSigmoid,
  kTanh,
  kRelu,
  kConcat,
  kSlice,
  kRow,
  kStackRows,
  kConcatRows,
  kSliceRows,
  kSoftmax,
  kLogSoftmax,
  kCrossEntropy,
  kSum,
  kIm2Col,
  kBatchNormTrain,
  kBatchNormInfer,
};

const char* op_name(Op op);

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  // Adjoint from the most recent backward(); empty if unreached.
  std::span<const double> adjoint() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Append-only computation record. Nodes are stored in creation order, so
// every node's inputs precede it and a reverse sweep is a valid topological
// order. A tape is confined to one thread.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  // Detached value; never receives gradient.
  Var constant(Tensor value);
  // Leaf referencing a parameter without copying it. Repeated calls with the
  // same tensor return the same node. The tensor must outlive the tape.
  Var param(const Tensor& p);

  // Reverse sweep from a scalar. Node adjoints are recomputed from scratch;
  // parameter gradients accumulate into the parameters' grad buffers.
  void backward(Var loss);

  Op op(Var v) const { return nodes_[v.id()].op; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  const Tensor& value(Var v) const;
  std::span<const double> adjoint(Var v) const { return nodes_[v.id()].grad; }

  struct Node {
    Op op = Op::kConstant;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    const Tensor* param = nullptr;
    std::vector<double> grad;
    // Op-specific intermediates and integer attributes.
    std::vector<double> saved;
    std::vector<std::size_t> index;
    bool requires_grad = false;
  };

  // Used by operation implementations.
  Var push(Node node);
  const Node& node(Var v) const { return nodes_[v.id()]; }

 private:
  std::vector<double>& adjoint_buffer(std::uint32_t id);
  void backprop_node(std::uint32_t id);

  bool grad_enabled_;
  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> param_ids_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }
inline std::span<const double> Var::adjoint() const {
  return tape_->adjoint(*this);
}

// ---------------------------------------------------------------------------
// Operations. All operands must live on the same tape.

Var matmul(Var a, Var b);                  // [m x k] . [k x n]
Var matvec(Var w, Var x);                  // [m x n] . [n]
Var transpose(Var a);                      // [m x n] -> [n x m]
Var add(Var a, Var b);                     // identical shapes
Var sub(Var a, Var b);
Var mul(Var a, Var b);                     // elementwise
Var scale(Var a, double factor);
Var add_rowvec(Var m, Var v);              // [r x c] + [c] on every row
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var concat(std::span<const Var> parts);    // vectors end to end
Var concat(std::initializer_list<Var> parts);
Var slice(Var v, std::size_t offset, std::size_t length);
Var row(Var m, std::size_t r);             // [r x c] -> [c]
Var stack_rows(std::span<const Var> rows); // k vectors of [c] -> [k x c]
Var concat_rows(std::span<const Var> blocks);
Var slice_rows(Var m, std::size_t begin, std::size_t count);
Var softmax(Var v);
Var log_softmax(Var v);
Var sum(Var a);

// Mean negative log-likelihood over rows whose mask entry is nonzero.
Var cross_entropy(Var logits, std::span<const std::size_t> targets,
                  std::span<const std::uint8_t> mask);

// Unfolds [T x F] into [T' x K*F] windows, T' = (T + 2*pad - K)/stride + 1.
Var im2col(Var x, std::size_t kernel, std::size_t stride, std::size_t pad);

// Per-column normalization of [N x C] by batch statistics. The variance is
// floored at eps before the square root. Batch mean and (biased) variance are
// written to the optional outputs.
Var batch_norm_train(Var x, Var gamma, Var beta, double eps,
                     std::vector<double>* batch_mean = nullptr,
                     std::vector<double>* batch_var = nullptr);
// Same normalization with fixed statistics.
Var batch_norm_infer(Var x, Var gamma, Var beta, std::span<const double> mean,
                     std::span<const double> var, double eps);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace mute::ad

#endif  // MUTE_AUTODIFF_TAPE_H_
