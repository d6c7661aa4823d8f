// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "autodiff/tape.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/errors.h"

namespace mute::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kParam: return "param";
    case Op::kConstant: return "constant";
    case Op::kMatMul: return "matmul";
    case Op::kMatVec: return "matvec";
    case Op::kTranspose: return "transpose";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddRowVec: return "add_rowvec";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kRow: return "row";
    case Op::kStackRows: return "stack_rows";
    case Op::kConcatRows: return "concat_rows";
    case Op::kSliceRows: return "slice_rows";
    case Op::kSoftmax: return "softmax";
    case Op::kLogSoftmax: return "log_softmax";
    case Op::kCrossEntropy: return "cross_entropy";
    case Op::kSum: return "sum";
    case Op::kIm2Col: return "im2col";
    case Op::kBatchNormTrain: return "batch_norm_train";
    case Op::kBatchNormInfer: return "batch_norm_infer";
  }
  return "?";
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.param ? *n.param : n.value;
}

Var Tape::push(Node node) {
  if (node.op != Op::kParam && node.op != Op::kConstant) {
    node.requires_grad = false;
    for (auto in : node.inputs) {
      node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
    }
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(const Tensor& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var(this, it->second);
  Node n;
  n.op = Op::kParam;
  n.param = &p;
  n.requires_grad = grad_enabled_ && p.requires_grad();
  Var v = push(std::move(n));
  param_ids_.emplace(&p, v.id());
  return v;
}

std::vector<double>& Tape::adjoint_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(Var(this, id)).size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) {
    throw ContractError("backward: loss is not attached to this tape");
  }
  if (value(loss).size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_str(value(loss).shape()));
  }
  for (auto& n : nodes_) n.grad.clear();
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad.assign(1, 1.0);
  for (std::uint32_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.op == Op::kParam) {
      n.param->accumulate_grad(n.grad);
    } else {
      backprop_node(id);
    }
  }
}

namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape() != b.tape()) {
    throw ContractError(std::string(op) + ": operands on different tapes");
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got shape " +
                         shape_str(a.shape()));
  }
}

void require_finite(const Tensor& a, const char* op) {
  for (double x : a.data()) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(op) + ": non-finite input");
    }
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tape::Node make_node(Op op, std::initializer_list<Var> inputs, Tensor value) {
  Tape::Node n;
  n.op = op;
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) n.inputs.push_back(v.id());
  n.value = std::move(value);
  return n;
}

Tape* tape_of(Var v, const char* op) {
  if (!v.valid()) throw ContractError(std::string(op) + ": invalid variable");
  return v.tape();
}

// Normalizes by max-subtraction; out receives log-probabilities.
void log_softmax_into(std::span<const double> x, std::span<double> out) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - mx);
  const double lse = mx + std::log(acc);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward definitions.

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_str(A.shape()) +
                         " by " + shape_str(B.shape()));
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* o = &out.at(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A.at(i, p);
      const double* br = &B.data()[p * n];
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
  return a.tape()->push(make_node(Op::kMatMul, {a, b}, std::move(out)));
}

Var matvec(Var w, Var x) {
  require_same_tape(w, x, "matvec");
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  if (W.rank() != 2 || X.rank() != 1 || W.cols() != X.size()) {
    throw DimensionError("matvec: cannot multiply " + shape_str(W.shape()) +
                         " by " + shape_str(X.shape()));
  }
  const std::size_t m = W.rows(), n = W.cols();
  Tensor out({m});
  const double* xs = X.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* wr = &W.data()[i * n];
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += wr[j] * xs[j];
    out[i] = acc;
  }
  return w.tape()->push(make_node(Op::kMatVec, {w, x}, std::move(out)));
}

Var transpose(Var a) {
  const Tensor& A = a.value();
  require_rank(A, 2, "transpose");
  Tensor out({A.cols(), A.rows()});
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < A.cols(); ++j) out.at(j, i) = A.at(i, j);
  }
  return tape_of(a, "transpose")
      ->push(make_node(Op::kTranspose, {a}, std::move(out)));
}

namespace {

template <typename F>
Var binary_elementwise(Op op, Var a, Var b, const char* name, F f) {
  require_same_tape(a, b, name);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_same_shape(A, B, name);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = f(A[i], B[i]);
  return a.tape()->push(make_node(op, {a, b}, std::move(out)));
}

template <typename F>
Var unary_elementwise(Op op, Var a, const char* name, F f) {
  const Tensor& A = a.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = f(A[i]);
  return tape_of(a, name)->push(make_node(op, {a}, std::move(out)));
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(Op::kAdd, a, b, "add",
                            [](double x, double y) { return x + y; });
}

Var sub(Var a, Var b) {
  return binary_elementwise(Op::kSub, a, b, "sub",
                            [](double x, double y) { return x - y; });
}

Var mul(Var a, Var b) {
  return binary_elementwise(Op::kMul, a, b, "mul",
                            [](double x, double y) { return x * y; });
}

Var scale(Var a, double factor) {
  const Tensor& A = a.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = factor * A[i];
  auto n = make_node(Op::kScale, {a}, std::move(out));
  n.saved = {factor};
  return tape_of(a, "scale")->push(std::move(n));
}

Var add_rowvec(Var m, Var v) {
  require_same_tape(m, v, "add_rowvec");
  const Tensor& M = m.value();
  const Tensor& V = v.value();
  if (M.rank() != 2 || V.rank() != 1 || M.cols() != V.size()) {
    throw DimensionError("add_rowvec: cannot broadcast " +
                         shape_str(V.shape()) + " over rows of " +
                         shape_str(M.shape()));
  }
  Tensor out(M.shape());
  for (std::size_t i = 0; i < M.rows(); ++i) {
    for (std::size_t j = 0; j < M.cols(); ++j) {
      out.at(i, j) = M.at(i, j) + V[j];
    }
  }
  return m.tape()->push(make_node(Op::kAddRowVec, {m, v}, std::move(out)));
}

Var sigmoid(Var a) {
  return unary_elementwise(Op::kSigmoid, a, "sigmoid", sigmoid_scalar);
}

Var tanh(Var a) {
  return unary_elementwise(Op::kTanh, a, "tanh",
                           [](double x) { return std::tanh(x); });
}

Var relu(Var a) {
  return unary_elementwise(Op::kRelu, a, "relu",
                           [](double x) { return x > 0.0 ? x : 0.0; });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat: no operands");
  Tape* tape = tape_of(parts[0], "concat");
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p, "concat");
    require_rank(p.value(), 1, "concat");
    total += p.size();
  }
  Tensor out({total});
  Tape::Node n;
  n.op = Op::kConcat;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    std::copy(P.data().begin(), P.data().end(), out.data().begin() + off);
    off += P.size();
    n.inputs.push_back(p.id());
  }
  n.value = std::move(out);
  return tape->push(std::move(n));
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var v, std::size_t offset, std::size_t length) {
  const Tensor& V = v.value();
  require_rank(V, 1, "slice");
  if (offset + length > V.size()) {
    throw IndexError("slice: range [" + std::to_string(offset) + ", " +
                     std::to_string(offset + length) + ") exceeds length " +
                     std::to_string(V.size()));
  }
  Tensor out({length});
  std::copy_n(V.data().begin() + offset, length, out.data().begin());
  auto n = make_node(Op::kSlice, {v}, std::move(out));
  n.index = {offset};
  return tape_of(v, "slice")->push(std::move(n));
}

Var row(Var m, std::size_t r) {
  const Tensor& M = m.value();
  require_rank(M, 2, "row");
  if (r >= M.rows()) {
    throw IndexError("row: index " + std::to_string(r) + " out of range for " +
                     shape_str(M.shape()));
  }
  Tensor out({M.cols()});
  auto src = M.row(r);
  std::copy(src.begin(), src.end(), out.data().begin());
  auto n = make_node(Op::kRow, {m}, std::move(out));
  n.index = {r};
  return tape_of(m, "row")->push(std::move(n));
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ContractError("stack_rows: no operands");
  Tape* tape = tape_of(rows[0], "stack_rows");
  const std::size_t c = rows[0].size();
  Tensor out({rows.size(), c});
  Tape::Node n;
  n.op = Op::kStackRows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require_same_tape(rows[0], rows[i], "stack_rows");
    const Tensor& R = rows[i].value();
    if (R.rank() != 1 || R.size() != c) {
      throw DimensionError("stack_rows: row " + std::to_string(i) +
                           " has shape " + shape_str(R.shape()) +
                           ", expected [" + std::to_string(c) + "]");
    }
    std::copy(R.data().begin(), R.data().end(), &out.at(i, 0));
    n.inputs.push_back(rows[i].id());
  }
  n.value = std::move(out);
  return tape->push(std::move(n));
}

Var concat_rows(std::span<const Var> blocks) {
  if (blocks.empty()) throw ContractError("concat_rows: no operands");
  Tape* tape = tape_of(blocks[0], "concat_rows");
  const std::size_t c = blocks[0].value().cols();
  std::size_t total = 0;
  for (const Var& b : blocks) {
    require_same_tape(blocks[0], b, "concat_rows");
    const Tensor& B = b.value();
    require_rank(B, 2, "concat_rows");
    if (B.cols() != c) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_str(blocks[0].shape()) + " vs " +
                           shape_str(B.shape()));
    }
    total += B.rows();
  }
  Tensor out({total, c});
  Tape::Node n;
  n.op = Op::kConcatRows;
  std::size_t off = 0;
  for (const Var& b : blocks) {
    const Tensor& B = b.value();
    std::copy(B.data().begin(), B.data().end(), out.data().begin() + off);
    off += B.size();
    n.inputs.push_back(b.id());
  }
  n.value = std::move(out);
  return tape->push(std::move(n));
}

Var slice_rows(Var m, std::size_t begin, std::size_t count) {
  const Tensor& M = m.value();
  require_rank(M, 2, "slice_rows");
  if (begin + count > M.rows()) {
    throw IndexError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") exceed " +
                     shape_str(M.shape()));
  }
  const std::size_t c = M.cols();
  Tensor out({count, c});
  std::copy_n(M.data().begin() + begin * c, count * c, out.data().begin());
  auto n = make_node(Op::kSliceRows, {m}, std::move(out));
  n.index = {begin};
  return tape_of(m, "slice_rows")->push(std::move(n));
}

Var softmax(Var v) {
  const Tensor& V = v.value();
  require_rank(V, 1, "softmax");
  if (V.size() == 0) throw DimensionError("softmax: empty input");
  require_finite(V, "softmax");
  Tensor out({V.size()});
  log_softmax_into(V.data(), out.data());
  for (auto& x : out.data()) x = std::exp(x);
  return tape_of(v, "softmax")
      ->push(make_node(Op::kSoftmax, {v}, std::move(out)));
}

Var log_softmax(Var v) {
  const Tensor& V = v.value();
  require_rank(V, 1, "log_softmax");
  if (V.size() == 0) throw DimensionError("log_softmax: empty input");
  require_finite(V, "log_softmax");
  Tensor out({V.size()});
  log_softmax_into(V.data(), out.data());
  return tape_of(v, "log_softmax")
      ->push(make_node(Op::kLogSoftmax, {v}, std::move(out)));
}

Var sum(Var a) {
  double acc = 0.0;
  for (double x : a.value().data()) acc += x;
  return tape_of(a, "sum")
      ->push(make_node(Op::kSum, {a}, Tensor::scalar(acc)));
}

Var cross_entropy(Var logits, std::span<const std::size_t> targets,
                  std::span<const std::uint8_t> mask) {
  const Tensor& L = logits.value();
  require_rank(L, 2, "cross_entropy");
  const std::size_t rows = L.rows(), vocab = L.cols();
  if (targets.size() != rows || mask.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets and " + std::to_string(mask.size()) +
                         " mask entries for logits " + shape_str(L.shape()));
  }
  std::size_t count = 0;
  for (std::size_t u = 0; u < rows; ++u) {
    if (!mask[u]) continue;
    if (targets[u] >= vocab) {
      throw IndexError("cross_entropy: target " + std::to_string(targets[u]) +
                       " at row " + std::to_string(u) + " >= vocab " +
                       std::to_string(vocab));
    }
    ++count;
  }
  if (count == 0) throw ContractError("cross_entropy: every row is masked");
  require_finite(L, "cross_entropy");

  // saved holds per-row softmax for unmasked rows (zeros elsewhere).
  std::vector<double> probs(rows * vocab, 0.0);
  double total = 0.0;
  std::vector<double> logp(vocab);
  for (std::size_t u = 0; u < rows; ++u) {
    if (!mask[u]) continue;
    log_softmax_into(L.row(u), logp);
    total -= logp[targets[u]];
    for (std::size_t j = 0; j < vocab; ++j) {
      probs[u * vocab + j] = std::exp(logp[j]);
    }
  }
  auto n = make_node(Op::kCrossEntropy, {logits},
                     Tensor::scalar(total / static_cast<double>(count)));
  n.saved = std::move(probs);
  n.index.assign(targets.begin(), targets.end());
  n.index.push_back(count);
  for (std::size_t u = 0; u < rows; ++u) {
    if (!mask[u]) n.index[u] = SIZE_MAX;
  }
  return tape_of(logits, "cross_entropy")->push(std::move(n));
}

Var im2col(Var x, std::size_t kernel, std::size_t stride, std::size_t pad) {
  const Tensor& X = x.value();
  require_rank(X, 2, "im2col");
  if (kernel == 0 || stride == 0) {
    throw ContractError("im2col: kernel and stride must be positive");
  }
  const std::size_t t_in = X.rows(), f = X.cols();
  if (t_in + 2 * pad < kernel) {
    throw ContractError("im2col: " + std::to_string(t_in) +
                        " frames shorter than kernel " +
                        std::to_string(kernel));
  }
  const std::size_t t_out = (t_in + 2 * pad - kernel) / stride + 1;
  Tensor out({t_out, kernel * f});
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + k) -
                                 static_cast<std::ptrdiff_t>(pad);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
      std::copy_n(&X.data()[src * f], f, &out.at(t, k * f));
    }
  }
  auto n = make_node(Op::kIm2Col, {x}, std::move(out));
  n.index = {kernel, stride, pad};
  return tape_of(x, "im2col")->push(std::move(n));
}

namespace {

void check_bn_operands(const Tensor& X, const Tensor& G, const Tensor& B,
                       const char* name) {
  require_rank(X, 2, name);
  if (G.rank() != 1 || B.rank() != 1 || G.size() != X.cols() ||
      B.size() != X.cols()) {
    throw DimensionError(std::string(name) + ": scale " +
                         shape_str(G.shape()) + " / shift " +
                         shape_str(B.shape()) + " do not match input " +
                         shape_str(X.shape()));
  }
}

}  // namespace

Var batch_norm_train(Var x, Var gamma, Var beta, double eps,
                     std::vector<double>* batch_mean,
                     std::vector<double>* batch_var) {
  require_same_tape(x, gamma, "batch_norm_train");
  require_same_tape(x, beta, "batch_norm_train");
  const Tensor& X = x.value();
  const Tensor& G = gamma.value();
  const Tensor& B = beta.value();
  check_bn_operands(X, G, B, "batch_norm_train");
  const std::size_t rows = X.rows(), c = X.cols();
  if (rows == 0) throw ContractError("batch_norm_train: empty batch");
  std::vector<double> mean(c, 0.0), var(c, 0.0), inv_std(c);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < c; ++j) mean[j] += X.at(i, j);
  }
  for (auto& m : mean) m /= static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double d = X.at(i, j) - mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    var[j] /= static_cast<double>(rows);
    inv_std[j] = 1.0 / std::sqrt(std::max(var[j], eps));
  }
  Tensor out(X.shape());
  // saved layout: normalized input [rows*c], inv_std [c], then a per-channel
  // flag that is 1 when the variance floor is not active.
  std::vector<double> saved(rows * c + 2 * c);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double xhat = (X.at(i, j) - mean[j]) * inv_std[j];
      saved[i * c + j] = xhat;
      out.at(i, j) = G[j] * xhat + B[j];
    }
  }
  std::copy(inv_std.begin(), inv_std.end(), saved.begin() + rows * c);
  for (std::size_t j = 0; j < c; ++j) {
    saved[rows * c + c + j] = var[j] >= eps ? 1.0 : 0.0;
  }
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;
  auto n = make_node(Op::kBatchNormTrain, {x, gamma, beta}, std::move(out));
  n.saved = std::move(saved);
  return x.tape()->push(std::move(n));
}

Var batch_norm_infer(Var x, Var gamma, Var beta, std::span<const double> mean,
                     std::span<const double> var, double eps) {
  require_same_tape(x, gamma, "batch_norm_infer");
  require_same_tape(x, beta, "batch_norm_infer");
  const Tensor& X = x.value();
  const Tensor& G = gamma.value();
  const Tensor& B = beta.value();
  check_bn_operands(X, G, B, "batch_norm_infer");
  const std::size_t rows = X.rows(), c = X.cols();
  if (mean.size() != c || var.size() != c) {
    throw DimensionError("batch_norm_infer: running statistics do not match " +
                         shape_str(X.shape()));
  }
  std::vector<double> saved(rows * c + c);
  Tensor out(X.shape());
  for (std::size_t j = 0; j < c; ++j) {
    saved[rows * c + j] = 1.0 / std::sqrt(std::max(var[j], eps));
  }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double xhat = (X.at(i, j) - mean[j]) * saved[rows * c + j];
      saved[i * c + j] = xhat;
      out.at(i, j) = G[j] * xhat + B[j];
    }
  }
  auto n = make_node(Op::kBatchNormInfer, {x, gamma, beta}, std::move(out));
  n.saved = std::move(saved);
  return x.tape()->push(std::move(n));
}

// ---------------------------------------------------------------------------
// Reverse rules.

void Tape::backprop_node(std::uint32_t id) {
  // References into nodes_ stay valid: backward never appends.
  Node& n = nodes_[id];
  const std::vector<double>& g = n.grad;
  const Tensor& out = n.value;
  auto input_value = [&](std::size_t k) -> const Tensor& {
    return value(Var(this, n.inputs[k]));
  };
  auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };
  auto grad_of = [&](std::size_t k) -> std::vector<double>& {
    return adjoint_buffer(n.inputs[k]);
  };

  switch (n.op) {
    case Op::kParam:
    case Op::kConstant:
      break;

    case Op::kMatMul: {
      const Tensor& A = input_value(0);
      const Tensor& B = input_value(1);
      const std::size_t m = A.rows(), k = A.cols(), cols = B.cols();
      if (wants(0)) {
        auto& ga = grad_of(0);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
              acc += g[i * cols + j] * B.data()[p * cols + j];
            }
            ga[i * k + p] += acc;
          }
        }
      }
      if (wants(1)) {
        auto& gb = grad_of(1);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A.data()[i * k + p];
            for (std::size_t j = 0; j < cols; ++j) {
              gb[p * cols + j] += av * g[i * cols + j];
            }
          }
        }
      }
      break;
    }

    case Op::kMatVec: {
      const Tensor& W = input_value(0);
      const Tensor& X = input_value(1);
      const std::size_t m = W.rows(), cols = W.cols();
      if (wants(0)) {
        auto& gw = grad_of(0);
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[i];
          double* row = &gw[i * cols];
          for (std::size_t j = 0; j < cols; ++j) row[j] += gi * X[j];
        }
      }
      if (wants(1)) {
        auto& gx = grad_of(1);
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[i];
          const double* wr = &W.data()[i * cols];
          for (std::size_t j = 0; j < cols; ++j) gx[j] += wr[j] * gi;
        }
      }
      break;
    }

    case Op::kTranspose: {
      if (!wants(0)) break;
      const std::size_t r = out.rows(), c = out.cols();
      auto& ga = grad_of(0);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) ga[j * r + i] += g[i * c + j];
      }
      break;
    }

    case Op::kAdd:
    case Op::kSub: {
      const double sign = n.op == Op::kAdd ? 1.0 : -1.0;
      if (wants(0)) {
        auto& ga = grad_of(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(1)) {
        auto& gb = grad_of(1);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
      }
      break;
    }

    case Op::kMul: {
      const Tensor& A = input_value(0);
      const Tensor& B = input_value(1);
      if (wants(0)) {
        auto& ga = grad_of(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
      }
      if (wants(1)) {
        auto& gb = grad_of(1);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
      }
      break;
    }

    case Op::kScale: {
      auto& ga = grad_of(0);
      const double f = n.saved[0];
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += f * g[i];
      break;
    }

    case Op::kAddRowVec: {
      const std::size_t r = out.rows(), c = out.cols();
      if (wants(0)) {
        auto& gm = grad_of(0);
        for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
      }
      if (wants(1)) {
        auto& gv = grad_of(1);
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) gv[j] += g[i * c + j];
        }
      }
      break;
    }

    case Op::kSigmoid: {
      auto& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = out[i];
        ga[i] += g[i] * s * (1.0 - s);
      }
      break;
    }

    case Op::kTanh: {
      auto& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = out[i];
        ga[i] += g[i] * (1.0 - t * t);
      }
      break;
    }

    case Op::kRelu: {
      auto& ga = grad_of(0);
      const Tensor& A = input_value(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (A[i] > 0.0) ga[i] += g[i];
      }
      break;
    }

    case Op::kConcat:
    case Op::kStackRows:
    case Op::kConcatRows: {
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t len = input_value(k).size();
        if (wants(k)) {
          auto& gk = grad_of(k);
          for (std::size_t i = 0; i < len; ++i) gk[i] += g[off + i];
        }
        off += len;
      }
      break;
    }

    case Op::kSlice:
    case Op::kRow:
    case Op::kSliceRows: {
      const std::size_t stride = n.op == Op::kSlice ? 1 : out.size();
      const std::size_t off =
          n.op == Op::kSliceRows ? n.index[0] * input_value(0).cols()
                                 : n.index[0] * stride;
      auto& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
      break;
    }

    case Op::kSoftmax: {
      auto& ga = grad_of(0);
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * out[i];
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += out[i] * (g[i] - dot);
      }
      break;
    }

    case Op::kLogSoftmax: {
      auto& ga = grad_of(0);
      double total = 0.0;
      for (double gi : g) total += gi;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] - std::exp(out[i]) * total;
      }
      break;
    }

    case Op::kSum: {
      auto& ga = grad_of(0);
      for (auto& x : ga) x += g[0];
      break;
    }

    case Op::kCrossEntropy: {
      const Tensor& L = input_value(0);
      const std::size_t rows = L.rows(), vocab = L.cols();
      const double count = static_cast<double>(n.index[rows]);
      const double coeff = g[0] / count;
      auto& gl = grad_of(0);
      for (std::size_t u = 0; u < rows; ++u) {
        const std::size_t target = n.index[u];
        if (target == SIZE_MAX) continue;
        for (std::size_t j = 0; j < vocab; ++j) {
          gl[u * vocab + j] += coeff * n.saved[u * vocab + j];
        }
        gl[u * vocab + target] -= coeff;
      }
      break;
    }

    case Op::kIm2Col: {
      const Tensor& X = input_value(0);
      const std::size_t kernel = n.index[0], stride = n.index[1],
                        pad = n.index[2];
      const std::size_t t_in = X.rows(), f = X.cols(), t_out = out.rows();
      auto& gx = grad_of(0);
      for (std::size_t t = 0; t < t_out; ++t) {
        for (std::size_t k = 0; k < kernel; ++k) {
          const std::ptrdiff_t src =
              static_cast<std::ptrdiff_t>(t * stride + k) -
              static_cast<std::ptrdiff_t>(pad);
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
          for (std::size_t j = 0; j < f; ++j) {
            gx[src * f + j] += g[t * kernel * f + k * f + j];
          }
        }
      }
      break;
    }

    case Op::kBatchNormTrain:
    case Op::kBatchNormInfer: {
      const Tensor& G = input_value(1);
      const std::size_t rows = out.rows(), c = out.cols();
      const double* xhat = n.saved.data();
      const double* inv_std = n.saved.data() + rows * c;
      std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          sum_g[j] += g[i * c + j];
          sum_gx[j] += g[i * c + j] * xhat[i * c + j];
        }
      }
      if (wants(2)) {
        auto& gb = grad_of(2);
        for (std::size_t j = 0; j < c; ++j) gb[j] += sum_g[j];
      }
      if (wants(1)) {
        auto& gg = grad_of(1);
        for (std::size_t j = 0; j < c; ++j) gg[j] += sum_gx[j];
      }
      if (wants(0)) {
        auto& gx = grad_of(0);
        if (n.op == Op::kBatchNormInfer) {
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              gx[i * c + j] += g[i * c + j] * G[j] * inv_std[j];
            }
          }
        } else {
          const double inv_n = 1.0 / static_cast<double>(rows);
          const double* live = inv_std + c;
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              const double k = G[j] * inv_std[j];
              gx[i * c + j] += k * (g[i * c + j] - inv_n * sum_g[j] -
                                    live[j] * xhat[i * c + j] * inv_n *
                                        sum_gx[j]);
            }
          }
        }
      }
      break;
    }
  }
}

}  // namespace mute::ad
