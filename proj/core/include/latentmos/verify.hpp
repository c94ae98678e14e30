#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lmos {

/// Tolerances and draw counts for the property suites. The gradient
/// tolerance is pinned by float64 central differences and does not tighten
/// under the strict profile.
struct ToleranceProfile {
  std::string name = "default";
  double commutator = 1e-10;
  double equivariance = 1e-9;
  double subgroup = 1e-10;
  double endpoint = 1e-9;     // fractional power at t = 0 and t = 1
  double exp_log = 1e-9;      // generator exponentiation round trip
  double orthonormal = 1e-12;
  double gradient = 1e-4;
  int commutator_draws = 1000;  // per commuting family
  int equivariance_pairs = 60;
  int equivariance_samples = 100;  // latent samples per pair
  int subgroup_draws = 200;
  int orthonormal_draws = 500;
  int mos_chain_steps = 10000;
  std::uint64_t seed = 20240915;
};

ToleranceProfile default_profile();
ToleranceProfile strict_profile();  // algebra tolerances at 1e-12
ToleranceProfile profile_by_name(const std::string& name);

struct PropertyResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Commutativity, equivariance, subgroup consistency, fractional endpoints,
/// generator round trips, orthonormality, and the homogeneous-coordinate
/// chain. Deterministic for a fixed profile.
std::vector<PropertyResult> run_algebra_suite(const ToleranceProfile& prof);

/// Finite-difference gradient checks: each expert constructor from its raw
/// parameters, the full encoder, and an end-to-end reconstruction loss.
std::vector<PropertyResult> run_gradient_suite(const ToleranceProfile& prof);

/// Both suites, algebra first.
std::vector<PropertyResult> run_verify(const ToleranceProfile& prof);

bool all_passed(const std::vector<PropertyResult>& results);

}  // namespace lmos
