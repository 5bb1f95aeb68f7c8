#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flowjump/flow.hpp"
#include "flowjump/stats.hpp"

namespace flowjump {

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. Work
/// items must write to disjoint slots; the result never depends on the
/// schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Initial conditions with mu-quadrature weights.
struct InitialGrid {
  int dim = 0;
  std::vector<Vec> points;
  std::vector<double> weights;

  double mass() const;
};

/// Midpoint rule in theta on (-atan G, atan G)^d mapped by x = tan(theta).
/// With G = 64 the mu-mass left outside the cube is below 1e-3 in d = 2.
InitialGrid mu_grid(int dim, int per_axis, double half_width = 64.0);

/// Midpoint grid on [-R, R]^d with mu-density weights (no mapping).
InitialGrid box_grid(int dim, int per_axis, double half_width);

/// integral psi dmu on a fine tan-mapped grid; the flow-free reference.
double mu_integral(const std::function<double(const Vec&)>& psi, int dim, int per_axis = 512);

struct NamedFunction {
  std::string name;
  std::function<double(const Vec&)> fn;
};

struct ChangeOfVariablesResult {
  std::string name;
  double flow_side = 0.0;       // E integral psi(X_t(x)) J^-_t(x) mu(dx)
  double standard_error = 0.0;
  double flow_free_side = 0.0;  // integral psi dmu
  double relative_error = 0.0;
  std::size_t excluded_paths = 0;  // divergent or nonpositive det
};

/// Change of variables through the backward ratio: substituting y = X_t(x)
/// gives integral psi(X_t(x)) J^-_t(x) mu(dx) = integral psi(y) mu(dy) for
/// every path on which the discrete flow map is a diffeomorphism.
std::vector<ChangeOfVariablesResult> change_of_variables_check(
    const SdeModel& model, const InitialGrid& grid, const std::vector<double>& time_grid,
    std::uint64_t seed, std::size_t n_paths, const std::vector<NamedFunction>& tests);

struct MomentReport {
  double p = 0.0;
  double beta = 0.0;
  Estimate det_moment;          // E mu-avg sup_t det(J_t)^{-p}
  Estimate growth_moment;       // E mu-avg sup_t (1+|X_t|^2)^p / (1+|x|^2)^p
  Estimate jacobian_integral;   // E sup_t integral |forward ratio|^{p+1} dmu
  Estimate det_moment_half;     // same three over the first half of the paths
  Estimate growth_moment_half;
  Estimate jacobian_integral_half;
  bool stable = false;          // all three within 2 pooled SE between halves and full
  std::size_t excluded_paths = 0;
};

/// Moment diagnostics over `n_paths` noise paths (the "half" estimates use
/// the first n_paths/2). Rejects p >= beta_alpha with GateViolation.
MomentReport moment_diagnostics(const SdeModel& model, const InitialGrid& grid,
                                const std::vector<double>& time_grid, std::uint64_t seed,
                                std::size_t n_paths, double p);

struct LiouvilleOracle {
  Vec x;                  // X_t(x0)
  double det = 1.0;       // exp integral div b(X_s) ds
};

/// High-accuracy ODE solution of dX = b dt together with the Liouville
/// determinant, by adaptive Dormand-Prince.
LiouvilleOracle liouville_oracle(const DriftTerm& drift, const Vec& x0, double t0, double t1);

}  // namespace flowjump
