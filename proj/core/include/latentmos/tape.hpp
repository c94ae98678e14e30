#pragma once

#include <memory>
#include <string>
#include <vector>

#include "latentmos/tensor.hpp"

namespace lmos {

class Tape;

/// Trainable leaf. backward() accumulates into grad with +=; gradients keep
/// accumulating across backward calls until reset_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string name_, Tensor value_)
      : name(std::move(name_)), value(std::move(value_)), grad(Tensor::zeros(value.shape())) {}

  void reset_grad() { grad = Tensor::zeros(value.shape()); }
};

/// Value handle. Tracked Vars carry a tape node id; untracked Vars flow
/// through the same op functions, which then only compute values. One op
/// implementation therefore serves both the training path and the
/// value-level oracle path.
struct Var {
  std::shared_ptr<const Tensor> value;
  Tape* tape = nullptr;
  int node = -1;

  bool tracked() const { return tape != nullptr; }
  const Tensor& val() const { return *value; }
};

/// Untracked value.
Var constant(Tensor t);
Var constant(double s);

/// Reverse-mode tape over the closed op set. Single-threaded by design:
/// nodes replay in reverse creation order and every reduction is a fixed-order
/// sequential sum, so identical graphs produce bit-identical gradients.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Tracked leaf bound to a Parameter.
  Var leaf(Parameter& p);

  /// Tracked leaf not bound to a Parameter; query its gradient afterwards
  /// with grad_at(). Used for input-sensitivity tests.
  Var input(Tensor t);

  /// Reverse sweep from a scalar loss on this tape. Parameter gradients
  /// accumulate; node gradients from this sweep stay readable via grad_at()
  /// until the next backward() call.
  void backward(const Var& loss);

  /// Gradient of the last backward()'s loss w.r.t. any node of this tape.
  /// Zero tensor when the loss does not depend on it.
  Tensor grad_at(const Var& v) const;

  std::size_t node_count() const { return nodes_.size(); }

  enum class Op {
    kLeaf,
    kInput,
    kMatmul,
    kAdd,
    kSub,
    kMul,
    kTanh,
    kSigmoid,
    kExp,
    kSoftplus,
    kLog,
    kSquare,
    kSum,
    kMean,
    kConcat,
    kSlice,
    kTranspose,
    kSoftmax,
    kNorm2,
    kReshape,
  };

  struct Node {
    Op op;
    int a = -1;  // parent ids; -1 when the operand is untracked
    int b = -1;
    std::shared_ptr<const Tensor> va;  // operand values (kept for backward)
    std::shared_ptr<const Tensor> vb;
    std::shared_ptr<const Tensor> out;
    Parameter* param = nullptr;  // kLeaf only
    int aux = 0;                 // kSlice start offset
  };

  // Used by the op implementations.
  Var record(Node n);

 private:
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<char> has_grad_;
  bool swept_ = false;
};

// The closed op set. Operands must share a tape when both are tracked.
// Elementwise binary ops accept equal shapes or one single-element operand,
// which broadcasts; reductions are whole-tensor.
Var matmul(const Var& a, const Var& b);  // (p,q)x(q,r) or (p,q)x(q)
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var exp(const Var& x);  // throws DomainError past the float64 overflow edge
Var softplus(const Var& x);
Var log(const Var& x);  // throws DomainError for non-positive entries
Var square(const Var& x);
Var sum(const Var& x);   // scalar
Var mean(const Var& x);  // scalar
Var concat(const Var& a, const Var& b);          // rank-1 operands
Var slice(const Var& x, int start, int len);     // rank-1 operand
Var transpose(const Var& x);                     // rank-2 operand
Var softmax(const Var& x);                       // rank-1 operand
Var norm2(const Var& x);                         // Euclidean norm, scalar
Var reshape(const Var& x, std::vector<int> shape);

/// mul(x, constant(s)) shorthand.
Var scale(const Var& x, double s);

}  // namespace lmos
