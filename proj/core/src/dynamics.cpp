#include "latentmos/dynamics.hpp"

#include <cmath>

#include "latentmos/error.hpp"

namespace lmos {

OdeSystem spiral_system() {
  OdeSystem s;
  s.name = "spiral";
  s.dim = 2;
  s.f = [](double, const std::vector<double>& x, std::vector<double>& dx) {
    dx[0] = -0.1 * x[0] - x[1];
    dx[1] = x[0] - 0.1 * x[1];
  };
  return s;
}

OdeSystem glycolytic_system() {
  OdeSystem s;
  s.name = "glycolytic";
  s.dim = 2;
  s.f = [](double, const std::vector<double>& x, std::vector<double>& dx) {
    const double coupling = x[0] * x[1] * x[1];
    dx[0] = 0.75 - 0.1 * x[0] - coupling;
    dx[1] = 0.1 * x[0] - x[1] + coupling;
  };
  return s;
}

OdeSystem lotka_system() {
  OdeSystem s;
  s.name = "lotka";
  s.dim = 2;
  s.f = [](double, const std::vector<double>& x, std::vector<double>& dx) {
    dx[0] = 0.1 * x[0] - 0.02 * x[0] * x[1];
    dx[1] = 0.01 * x[0] * x[1] - 0.3 * x[1];
  };
  return s;
}

std::vector<double> rk4_step(const OdeSystem& sys, const std::vector<double>& x, double t,
                             double dt) {
  const std::size_t n = x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), out(n);
  sys.f(t, x, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  sys.f(t + 0.5 * dt, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  sys.f(t + 0.5 * dt, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  sys.f(t + dt, tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

std::vector<std::vector<double>> integrate(const OdeSystem& sys, const std::vector<double>& x0,
                                           int n_steps, double dt, double t0) {
  if (dt <= 0.0) throw DomainError("integrate needs dt > 0");
  if (static_cast<int>(x0.size()) != sys.dim)
    throw DimensionError("integrate: state size " + std::to_string(x0.size()) + " vs system " +
                         sys.name + " dimension " + std::to_string(sys.dim));
  std::vector<std::vector<double>> grid;
  grid.reserve(static_cast<std::size_t>(n_steps) + 1);
  grid.push_back(x0);
  for (int k = 0; k < n_steps; ++k) {
    std::vector<double> next = rk4_step(sys, grid.back(), t0 + k * dt, dt);
    for (double v : next)
      if (!std::isfinite(v))
        throw DivergenceError("non-finite state integrating " + sys.name + " at step " +
                              std::to_string(k + 1));
    grid.push_back(std::move(next));
  }
  return grid;
}

}  // namespace lmos
