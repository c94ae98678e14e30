#pragma once

#include <functional>
#include <string>
#include <vector>

#include "latentmos/tape.hpp"

namespace lmos {

/// Builds a scalar loss on the given tape from the current parameter values.
/// Must be deterministic: two calls with identical parameter values must
/// produce identical losses (draw any noise outside and capture it).
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::int64_t worst_index = -1;
  double analytic = 0.0;
  double central = 0.0;
  std::int64_t entries_checked = 0;
};

/// |analytic - central| / max(1, |central|).
double rel_grad_error(double analytic, double central);

/// Central difference of the loss w.r.t. one parameter entry. Restores the
/// entry bit-exactly.
double central_difference(const LossBuilder& f, Parameter& p, std::int64_t index, double eps);

/// Compares backward() gradients against central differences for every entry
/// of every listed parameter. Resets gradients first; parameters are restored
/// bit-exactly.
GradCheckReport finite_diff_check(const LossBuilder& f, const std::vector<Parameter*>& params,
                                  double eps = 1e-5);

}  // namespace lmos
