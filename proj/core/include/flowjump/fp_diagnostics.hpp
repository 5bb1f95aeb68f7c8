#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "flowjump/particles.hpp"

namespace flowjump {

struct ResidualRow {
  std::string name;
  double t = 0.0;
  double residual = 0.0;  // d/dt <mu_t, phi> - <mu_t, L_t phi>
  double standard_error = 0.0;
};

/// Central difference of <mu_t, phi> on interior observation times minus
/// the particle average of L_t phi. Observation times must be uniform. The
/// standard error is that of the per-particle residual.
std::vector<ResidualRow> weak_residual(const PideSolution& sol, const GeneratorSpec& spec,
                                       const std::vector<std::shared_ptr<const TestFunction>>& family);

/// integral u^{q*} (1 + |x|^2)^{(q*-1) d} dx by grid quadrature.
double weighted_norm(const std::vector<double>& values, const DensityGrid& grid, double q_star);

struct ClassMembershipReport {
  double q_star = 0.0;
  double sup_full = 0.0;  // sup over observation times, all particles
  double sup_half = 0.0;  // same with the first half of the particles
  double relative_change = 0.0;
  bool finite = false;
  bool stable = false;    // relative_change <= kClassStabilityTolerance
};

inline constexpr double kClassStabilityTolerance = 0.1;

/// Membership statistic of the class M_{q*}; `bandwidth` 0 selects the default rule.
ClassMembershipReport class_membership(const PideSolution& sol, double q_star, const DensityGrid& grid,
                                       double bandwidth = 0.0);

struct RepresentationRow {
  std::string name;
  double t = 0.0;
  double particle_average = 0.0;
  double standard_error = 0.0;
  double density_integral = 0.0;  // <u_t, phi> by grid quadrature of the kernel density
};

/// Particle averages of phi(Y_t) next to <u_t, phi> from the kernel density.
std::vector<RepresentationRow> representation_check(const PideSolution& sol,
                                                    const std::vector<std::shared_ptr<const TestFunction>>& family,
                                                    const DensityGrid& grid);

struct SemigroupRow {
  Vec x;
  Estimate direct;  // T_{s,t} phi(x)
  Estimate nested;  // T_{s,r} (T_{r,t} phi)(x)
  double deviation = 0.0;
  double pooled_se = 0.0;
};

struct SemigroupReport {
  std::vector<SemigroupRow> rows;
  double max_deviation = 0.0;
  double max_z = 0.0;  // max deviation / pooled SE
};

struct SemigroupOptions {
  std::size_t direct_paths = 100000;
  std::size_t outer_paths = 1000;
  std::size_t inner_paths = 100;
  std::size_t steps_per_unit = 100;
};

/// Monte Carlo semigroup property on the given points. Direct paths use
/// streams 0..direct_paths-1 of `seed`; outer and inner paths use derived
/// streams of seed + 1.
SemigroupReport semigroup_check(const GeneratorSpec& spec, double s, double r, double t,
                                const TestFunction& phi, const std::vector<Vec>& xs, std::uint64_t seed,
                                SemigroupOptions options = {});

/// Frozen prefactor of the coupling budget kUniquenessC (1 + E int (M|grad b|(Y1) + M|grad b|(Y2)) ds).
inline constexpr double kUniquenessC = 1.0;

struct CouplingRow {
  double delta = 0.0;
  Estimate functional;  // E log(sup_{s <= t ^ tau_R} |Z_s|^2 / delta^2 + 1)
};

struct CouplingReport {
  std::vector<CouplingRow> rows;
  double R = 0.0;
  double budget = 0.0;         // independent of delta
  double maximal_integral = 0.0;
  double mean_sup_gap = 0.0;   // E sup |Z|
  double stopped_fraction = 0.0;
  double ratio = 0.0;          // max / min functional across delta
  bool bounded = false;        // every functional <= budget
  std::size_t excluded = 0;
};

struct CouplingOptions {
  std::size_t particles = 2000;
  std::size_t fine_steps = 200;  // on [0, 1]
  int coarsen_factor = 2;        // the second scheme keeps every factor-th base point
  double R = 10.0;
  double maximal_step = 0.1;     // sampling step of |grad b| for the maximal function
};

/// Two Euler schemes (dt and factor dt) driven by the same noise and the same X_0.
CouplingReport pathwise_uniqueness_diagnostic(const GeneratorSpec& spec, const InitialDensity& init,
                                              const std::vector<double>& deltas, std::uint64_t seed,
                                              CouplingOptions options = {});

/// CSV: name,t,residual,se.
void write_residual_csv(std::ostream& out, const std::vector<ResidualRow>& rows);
/// CSV: delta,functional,se,budget.
void write_coupling_csv(std::ostream& out, const CouplingReport& report);

}  // namespace flowjump
