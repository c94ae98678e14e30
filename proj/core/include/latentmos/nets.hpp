#pragma once

#include <string>
#include <vector>

#include "latentmos/rng.hpp"
#include "latentmos/tape.hpp"

namespace lmos {

// Fully connected network with tanh hidden layers and a linear output.
// Parameters live inside the struct; collect() exposes them for the
// optimizer and for serialization in a stable declaration order.
struct Mlp {
  Mlp(const std::string& prefix, int in_dim, int hidden_dim, int out_dim, int hidden_layers = 2);

  Var forward(Tape& tape, const Var& x);

  void collect(std::vector<Parameter*>& out);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

  // One weight matrix + bias per layer, hidden layers first.
  std::vector<Parameter> weights;
  std::vector<Parameter> biases;

 private:
  int in_dim_ = 0;
  int out_dim_ = 0;
};

// Fills every parameter in the list with uniform draws in [-a, a],
// a = 1/sqrt(fan_in of its layer). Matrices use their column count as
// fan-in; vectors (biases) reuse the fan-in recorded by their owner.
void init_uniform(std::vector<Parameter*>& params, Rng& rng);

}  // namespace lmos
