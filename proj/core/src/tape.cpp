#include "latentmos/tape.hpp"

#include <cmath>
#include <utility>

#include "latentmos/error.hpp"

namespace lmos {

namespace {

std::shared_ptr<const Tensor> share(Tensor t) {
  return std::make_shared<const Tensor>(std::move(t));
}

Tape* owner(const Var& a, const Var& b) {
  if (a.tracked() && b.tracked() && a.tape != b.tape)
    throw ContractError("operands recorded on different tapes");
  return a.tracked() ? a.tape : (b.tracked() ? b.tape : nullptr);
}

Var finish(Tape::Op op, const Var& a, const Var& b, Tensor out, int aux = 0) {
  Tape* t = owner(a, b);
  auto sp = share(std::move(out));
  if (!t) return Var{sp, nullptr, -1};
  Tape::Node n;
  n.op = op;
  n.a = a.tracked() ? a.node : -1;
  n.b = b.tracked() ? b.node : -1;
  n.va = a.value;
  n.vb = b.value;
  n.out = sp;
  n.aux = aux;
  return t->record(std::move(n));
}

Var finish(Tape::Op op, const Var& a, Tensor out, int aux = 0) {
  return finish(op, a, Var{}, std::move(out), aux);
}

enum class Bin { kAdd, kSub, kMul };

Tensor apply_binary(Bin f, const Tensor& a, const Tensor& b) {
  auto run = [f](double x, double y) {
    switch (f) {
      case Bin::kAdd: return x + y;
      case Bin::kSub: return x - y;
      default: return x * y;
    }
  };
  if (a.same_shape(b)) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = run(a[i], b[i]);
    return out;
  }
  if (b.is_scalar()) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = run(a[i], b[0]);
    return out;
  }
  if (a.is_scalar()) {
    Tensor out = Tensor::zeros(b.shape());
    for (std::int64_t i = 0; i < b.numel(); ++i) out[i] = run(a[0], b[i]);
    return out;
  }
  throw DimensionError("elementwise op on shapes " + a.shape_str() + " and " + b.shape_str());
}

// Sum g down to the shape of a broadcast single-element operand.
Tensor reduce_to_scalar_like(const Tensor& g, const std::vector<int>& shape) {
  Tensor out = Tensor::zeros(shape);
  double acc = 0.0;
  for (std::int64_t i = 0; i < g.numel(); ++i) acc += g[i];
  out[0] = acc;
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2)
    throw DimensionError("matmul left operand must be rank 2, got " + a.shape_str());
  if (b.rank() == 2) {
    if (a.cols() != b.rows())
      throw DimensionError("matmul shapes " + a.shape_str() + " and " + b.shape_str());
    Tensor out = Tensor::zeros({a.rows(), b.cols()});
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) {
        double acc = 0.0;
        for (int k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
        out.at(i, j) = acc;
      }
    return out;
  }
  if (b.rank() == 1) {
    if (a.cols() != b.shape()[0])
      throw DimensionError("matmul shapes " + a.shape_str() + " and " + b.shape_str());
    Tensor out = Tensor::zeros({a.rows()});
    for (int i = 0; i < a.rows(); ++i) {
      double acc = 0.0;
      for (int k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b[k];
      out[i] = acc;
    }
    return out;
  }
  throw DimensionError("matmul right operand must be rank 1 or 2, got " + b.shape_str());
}

Tensor transpose_values(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("transpose needs rank 2, got " + x.shape_str());
  Tensor out = Tensor::zeros({x.cols(), x.rows()});
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) out.at(j, i) = x.at(i, j);
  return out;
}

Tensor softmax_values(const Tensor& x) {
  if (x.rank() != 1) throw DimensionError("softmax needs rank 1, got " + x.shape_str());
  if (x.numel() == 0) throw DimensionError("softmax on empty vector");
  double m = x[0];
  for (std::int64_t i = 1; i < x.numel(); ++i) m = std::max(m, x[i]);
  Tensor out = Tensor::zeros(x.shape());
  double z = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    out[i] = std::exp(x[i] - m);
    z += out[i];
  }
  for (std::int64_t i = 0; i < x.numel(); ++i) out[i] /= z;
  return out;
}

}  // namespace

Var constant(Tensor t) { return Var{share(std::move(t)), nullptr, -1}; }

Var constant(double s) { return constant(Tensor::scalar(s)); }

Var Tape::leaf(Parameter& p) {
  Node n;
  n.op = Op::kLeaf;
  n.out = share(p.value);
  n.param = &p;
  return record(std::move(n));
}

Var Tape::input(Tensor t) {
  Node n;
  n.op = Op::kInput;
  n.out = share(std::move(t));
  return record(std::move(n));
}

Var Tape::record(Node n) {
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  return Var{nodes_.back().out, this, id};
}

void Tape::backward(const Var& loss) {
  if (!loss.tracked() || loss.tape != this)
    throw ContractError("backward: loss does not live on this tape");
  if (loss.val().numel() != 1) throw ContractError("backward: loss must be scalar");

  grads_.assign(nodes_.size(), Tensor{});
  has_grad_.assign(nodes_.size(), 0);
  grads_[static_cast<std::size_t>(loss.node)] = Tensor::full(loss.val().shape(), 1.0);
  has_grad_[static_cast<std::size_t>(loss.node)] = 1;

  auto accum = [this](int pid, Tensor g) {
    if (pid < 0) return;
    auto upid = static_cast<std::size_t>(pid);
    if (!has_grad_[upid]) {
      grads_[upid] = std::move(g);
      has_grad_[upid] = 1;
      return;
    }
    Tensor& dst = grads_[upid];
    for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += g[i];
  };

  for (int i = loss.node; i >= 0; --i) {
    auto ui = static_cast<std::size_t>(i);
    if (!has_grad_[ui]) continue;
    const Node& nd = nodes_[ui];
    const Tensor& g = grads_[ui];
    switch (nd.op) {
      case Op::kLeaf: {
        Tensor& pg = nd.param->grad;
        for (std::int64_t k = 0; k < pg.numel(); ++k) pg[k] += g[k];
        break;
      }
      case Op::kInput:
        break;
      case Op::kMatmul: {
        const Tensor& a = *nd.va;
        const Tensor& b = *nd.vb;
        if (b.rank() == 2) {
          if (nd.a >= 0) accum(nd.a, matmul_values(g, transpose_values(b)));
          if (nd.b >= 0) accum(nd.b, matmul_values(transpose_values(a), g));
        } else {
          if (nd.a >= 0) {
            Tensor da = Tensor::zeros(a.shape());
            for (int r = 0; r < a.rows(); ++r)
              for (int c = 0; c < a.cols(); ++c) da.at(r, c) = g[r] * b[c];
            accum(nd.a, std::move(da));
          }
          if (nd.b >= 0) {
            Tensor db = Tensor::zeros(b.shape());
            for (int c = 0; c < a.cols(); ++c) {
              double acc = 0.0;
              for (int r = 0; r < a.rows(); ++r) acc += a.at(r, c) * g[r];
              db[c] = acc;
            }
            accum(nd.b, std::move(db));
          }
        }
        break;
      }
      case Op::kAdd:
      case Op::kSub: {
        const double sb = nd.op == Op::kSub ? -1.0 : 1.0;
        const Tensor& a = *nd.va;
        const Tensor& b = *nd.vb;
        if (nd.a >= 0) {
          if (a.same_shape(g)) {
            accum(nd.a, g);
          } else {
            accum(nd.a, reduce_to_scalar_like(g, a.shape()));
          }
        }
        if (nd.b >= 0) {
          Tensor gb = b.same_shape(g) ? g : reduce_to_scalar_like(g, b.shape());
          for (std::int64_t k = 0; k < gb.numel(); ++k) gb[k] *= sb;
          accum(nd.b, std::move(gb));
        }
        break;
      }
      case Op::kMul: {
        const Tensor& a = *nd.va;
        const Tensor& b = *nd.vb;
        if (nd.a >= 0) {
          Tensor da = apply_binary(Bin::kMul, g, b);
          accum(nd.a, a.same_shape(da) ? std::move(da) : reduce_to_scalar_like(da, a.shape()));
        }
        if (nd.b >= 0) {
          Tensor db = apply_binary(Bin::kMul, g, a);
          accum(nd.b, b.same_shape(db) ? std::move(db) : reduce_to_scalar_like(db, b.shape()));
        }
        break;
      }
      case Op::kTanh: {
        const Tensor& y = *nd.out;
        Tensor da = Tensor::zeros(y.shape());
        for (std::int64_t k = 0; k < y.numel(); ++k) da[k] = (1.0 - y[k] * y[k]) * g[k];
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kSigmoid: {
        const Tensor& y = *nd.out;
        Tensor da = Tensor::zeros(y.shape());
        for (std::int64_t k = 0; k < y.numel(); ++k) da[k] = y[k] * (1.0 - y[k]) * g[k];
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kExp: {
        const Tensor& y = *nd.out;
        Tensor da = Tensor::zeros(y.shape());
        for (std::int64_t k = 0; k < y.numel(); ++k) da[k] = y[k] * g[k];
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kSoftplus: {
        const Tensor& x = *nd.va;
        Tensor da = Tensor::zeros(x.shape());
        for (std::int64_t k = 0; k < x.numel(); ++k) da[k] = stable_sigmoid(x[k]) * g[k];
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kLog: {
        const Tensor& x = *nd.va;
        Tensor da = Tensor::zeros(x.shape());
        for (std::int64_t k = 0; k < x.numel(); ++k) da[k] = g[k] / x[k];
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kSquare: {
        const Tensor& x = *nd.va;
        Tensor da = Tensor::zeros(x.shape());
        for (std::int64_t k = 0; k < x.numel(); ++k) da[k] = 2.0 * x[k] * g[k];
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kSum: {
        accum(nd.a, Tensor::full(nd.va->shape(), g[0]));
        break;
      }
      case Op::kMean: {
        accum(nd.a, Tensor::full(nd.va->shape(), g[0] / static_cast<double>(nd.va->numel())));
        break;
      }
      case Op::kConcat: {
        const std::int64_t na = nd.va->numel();
        if (nd.a >= 0) {
          Tensor da = Tensor::zeros(nd.va->shape());
          for (std::int64_t k = 0; k < na; ++k) da[k] = g[k];
          accum(nd.a, std::move(da));
        }
        if (nd.b >= 0) {
          Tensor db = Tensor::zeros(nd.vb->shape());
          for (std::int64_t k = 0; k < nd.vb->numel(); ++k) db[k] = g[na + k];
          accum(nd.b, std::move(db));
        }
        break;
      }
      case Op::kSlice: {
        Tensor da = Tensor::zeros(nd.va->shape());
        for (std::int64_t k = 0; k < g.numel(); ++k) da[nd.aux + k] = g[k];
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kTranspose: {
        accum(nd.a, transpose_values(g));
        break;
      }
      case Op::kSoftmax: {
        const Tensor& y = *nd.out;
        double dot = 0.0;
        for (std::int64_t k = 0; k < y.numel(); ++k) dot += g[k] * y[k];
        Tensor da = Tensor::zeros(y.shape());
        for (std::int64_t k = 0; k < y.numel(); ++k) da[k] = y[k] * (g[k] - dot);
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kNorm2: {
        const Tensor& x = *nd.va;
        const double r = (*nd.out)[0];
        Tensor da = Tensor::zeros(x.shape());
        if (r > 0.0)
          for (std::int64_t k = 0; k < x.numel(); ++k) da[k] = x[k] / r * g[0];
        accum(nd.a, std::move(da));
        break;
      }
      case Op::kReshape: {
        Tensor da = Tensor::zeros(nd.va->shape());
        for (std::int64_t k = 0; k < da.numel(); ++k) da[k] = g[k];
        accum(nd.a, std::move(da));
        break;
      }
    }
  }
  swept_ = true;
}

Tensor Tape::grad_at(const Var& v) const {
  if (!swept_) throw ContractError("grad_at before backward");
  if (!v.tracked() || v.tape != this) throw ContractError("grad_at: var not on this tape");
  auto ui = static_cast<std::size_t>(v.node);
  if (ui >= grads_.size() || !has_grad_[ui]) return Tensor::zeros(v.val().shape());
  return grads_[ui];
}

Var matmul(const Var& a, const Var& b) {
  return finish(Tape::Op::kMatmul, a, b, matmul_values(a.val(), b.val()));
}

Var add(const Var& a, const Var& b) {
  return finish(Tape::Op::kAdd, a, b, apply_binary(Bin::kAdd, a.val(), b.val()));
}

Var sub(const Var& a, const Var& b) {
  return finish(Tape::Op::kSub, a, b, apply_binary(Bin::kSub, a.val(), b.val()));
}

Var mul(const Var& a, const Var& b) {
  return finish(Tape::Op::kMul, a, b, apply_binary(Bin::kMul, a.val(), b.val()));
}

Var tanh(const Var& x) {
  Tensor out = Tensor::zeros(x.val().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(x.val()[i]);
  return finish(Tape::Op::kTanh, x, std::move(out));
}

Var sigmoid(const Var& x) {
  Tensor out = Tensor::zeros(x.val().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = stable_sigmoid(x.val()[i]);
  return finish(Tape::Op::kSigmoid, x, std::move(out));
}

Var exp(const Var& x) {
  Tensor out = Tensor::zeros(x.val().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const double v = x.val()[i];
    if (v > 709.0)
      throw DomainError("exp overflow at flat index " + std::to_string(i) + ", argument " +
                        std::to_string(v));
    out[i] = std::exp(v);
  }
  return finish(Tape::Op::kExp, x, std::move(out));
}

Var softplus(const Var& x) {
  Tensor out = Tensor::zeros(x.val().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const double v = x.val()[i];
    out[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
  }
  return finish(Tape::Op::kSoftplus, x, std::move(out));
}

Var log(const Var& x) {
  Tensor out = Tensor::zeros(x.val().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const double v = x.val()[i];
    if (v <= 0.0)
      throw DomainError("log of non-positive entry " + std::to_string(v) + " at flat index " +
                        std::to_string(i));
    out[i] = std::log(v);
  }
  return finish(Tape::Op::kLog, x, std::move(out));
}

Var square(const Var& x) {
  Tensor out = Tensor::zeros(x.val().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = x.val()[i] * x.val()[i];
  return finish(Tape::Op::kSquare, x, std::move(out));
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < x.val().numel(); ++i) acc += x.val()[i];
  return finish(Tape::Op::kSum, x, Tensor::scalar(acc));
}

Var mean(const Var& x) {
  if (x.val().numel() == 0) throw DimensionError("mean of empty tensor");
  double acc = 0.0;
  for (std::int64_t i = 0; i < x.val().numel(); ++i) acc += x.val()[i];
  return finish(Tape::Op::kMean, x, Tensor::scalar(acc / static_cast<double>(x.val().numel())));
}

Var concat(const Var& a, const Var& b) {
  if (a.val().rank() != 1 || b.val().rank() != 1)
    throw DimensionError("concat needs rank-1 operands, got " + a.val().shape_str() + " and " +
                         b.val().shape_str());
  Tensor out = Tensor::zeros({static_cast<int>(a.val().numel() + b.val().numel())});
  for (std::int64_t i = 0; i < a.val().numel(); ++i) out[i] = a.val()[i];
  for (std::int64_t i = 0; i < b.val().numel(); ++i) out[a.val().numel() + i] = b.val()[i];
  return finish(Tape::Op::kConcat, a, b, std::move(out));
}

Var slice(const Var& x, int start, int len) {
  if (x.val().rank() != 1)
    throw DimensionError("slice needs a rank-1 operand, got " + x.val().shape_str());
  if (start < 0 || len < 0 || start + len > x.val().numel())
    throw DimensionError("slice [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") out of range for length " + std::to_string(x.val().numel()));
  Tensor out = Tensor::zeros({len});
  for (int i = 0; i < len; ++i) out[i] = x.val()[start + i];
  return finish(Tape::Op::kSlice, x, std::move(out), start);
}

Var transpose(const Var& x) {
  return finish(Tape::Op::kTranspose, x, transpose_values(x.val()));
}

Var softmax(const Var& x) {
  return finish(Tape::Op::kSoftmax, x, softmax_values(x.val()));
}

Var norm2(const Var& x) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < x.val().numel(); ++i) acc += x.val()[i] * x.val()[i];
  return finish(Tape::Op::kNorm2, x, Tensor::scalar(std::sqrt(acc)));
}

Var reshape(const Var& x, std::vector<int> shape) {
  Tensor out = Tensor::zeros(shape);
  if (out.numel() != x.val().numel())
    throw DimensionError("reshape " + x.val().shape_str() + " to " + shape_str(shape));
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = x.val()[i];
  return finish(Tape::Op::kReshape, x, std::move(out));
}

Var scale(const Var& x, double s) { return mul(x, constant(s)); }

}  // namespace lmos
