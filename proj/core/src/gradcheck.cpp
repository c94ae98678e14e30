#include "latentmos/gradcheck.hpp"

#include <cmath>

#include "latentmos/error.hpp"

namespace lmos {

double rel_grad_error(double analytic, double central) {
  return std::abs(analytic - central) / std::max(1.0, std::abs(central));
}

namespace {
double loss_value(const LossBuilder& f) {
  Tape tape;
  Var loss = f(tape);
  if (loss.val().numel() != 1) throw ContractError("gradient check: loss must be scalar");
  return loss.val()[0];
}
}  // namespace

double central_difference(const LossBuilder& f, Parameter& p, std::int64_t index, double eps) {
  const double saved = p.value[index];
  p.value[index] = saved + eps;
  const double up = loss_value(f);
  p.value[index] = saved - eps;
  const double down = loss_value(f);
  p.value[index] = saved;
  return (up - down) / (2.0 * eps);
}

GradCheckReport finite_diff_check(const LossBuilder& f, const std::vector<Parameter*>& params,
                                  double eps) {
  for (Parameter* p : params) p->reset_grad();

  Tape tape;
  Var loss = f(tape);
  if (loss.val().numel() != 1) throw ContractError("gradient check: loss must be scalar");
  tape.backward(loss);

  // Snapshot analytic gradients before perturbation runs rebuild anything.
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    for (std::int64_t i = 0; i < p.value.numel(); ++i) {
      const double central = central_difference(f, p, i, eps);
      const double err = rel_grad_error(analytic[pi][i], central);
      ++report.entries_checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = p.name;
        report.worst_index = i;
        report.analytic = analytic[pi][i];
        report.central = central;
      }
    }
  }
  return report;
}

}  // namespace lmos
