#include "latentmos/nets.hpp"

#include <cmath>

#include "latentmos/error.hpp"

namespace lmos {

Mlp::Mlp(const std::string& prefix, int in_dim, int hidden_dim, int out_dim, int hidden_layers)
    : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim <= 0 || hidden_dim <= 0 || out_dim <= 0 || hidden_layers < 0)
    throw ConfigError("Mlp " + prefix + ": dimensions must be positive");
  int prev = in_dim;
  for (int l = 0; l < hidden_layers; ++l) {
    const std::string tag = prefix + ".h" + std::to_string(l);
    weights.emplace_back(tag + ".w", Tensor::zeros({hidden_dim, prev}));
    biases.emplace_back(tag + ".b", Tensor::zeros({hidden_dim}));
    prev = hidden_dim;
  }
  weights.emplace_back(prefix + ".out.w", Tensor::zeros({out_dim, prev}));
  biases.emplace_back(prefix + ".out.b", Tensor::zeros({out_dim}));
}

Var Mlp::forward(Tape& tape, const Var& x) {
  Var v = x;
  const std::size_t n = weights.size();
  for (std::size_t l = 0; l < n; ++l) {
    v = add(matmul(tape.leaf(weights[l]), v), tape.leaf(biases[l]));
    if (l + 1 < n) v = tanh(v);
  }
  return v;
}

void Mlp::collect(std::vector<Parameter*>& out) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
}

void init_uniform(std::vector<Parameter*>& params, Rng& rng) {
  // Biases inherit the fan-in of the matrix that precedes them in
  // collection order, which is how collect() interleaves them.
  int fan_in = 1;
  for (Parameter* p : params) {
    if (p->value.rank() == 2) fan_in = static_cast<int>(p->value.cols());
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
    for (std::int64_t i = 0; i < p->value.numel(); ++i) p->value[i] = rng.uniform(-a, a);
  }
}

}  // namespace lmos
