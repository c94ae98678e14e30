#pragma once

#include <functional>
#include <string>
#include <vector>

namespace lmos {

/// Autonomous or time-dependent vector field dx/dt = f(t, x).
struct OdeSystem {
  std::string name;
  int dim = 0;
  std::function<void(double t, const std::vector<double>& x, std::vector<double>& dx)> f;
};

/// Damped rotation: dx1 = -0.1 x1 - x2, dx2 = x1 - 0.1 x2.
OdeSystem spiral_system();

/// Biochemical oscillator with cubic coupling:
/// dx1 = 0.75 - 0.1 x1 - x1 x2^2, dx2 = 0.1 x1 - x2 + x1 x2^2.
OdeSystem glycolytic_system();

/// Predator-prey: dx1 = 0.1 x1 - 0.02 x1 x2, dx2 = 0.01 x1 x2 - 0.3 x2.
OdeSystem lotka_system();

/// Classic fourth-order Runge-Kutta update.
std::vector<double> rk4_step(const OdeSystem& sys, const std::vector<double>& x, double t,
                             double dt);

/// n_steps RK4 steps from x0; returns n_steps+1 states on the uniform grid.
/// Throws DivergenceError naming the step when the state leaves float range.
std::vector<std::vector<double>> integrate(const OdeSystem& sys, const std::vector<double>& x0,
                                           int n_steps, double dt, double t0 = 0.0);

}  // namespace lmos
