#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "flowjump/flow.hpp"
#include "flowjump/generator.hpp"
#include "flowjump/stats.hpp"

namespace flowjump {

/// Frozen bandwidth constant of the Gaussian kernel rule h = c N^{-1/(d+4)},
/// calibrated on the heat-kernel case (see tests/unit/test_particles.cpp).
inline constexpr double kKdeBandwidthConstant = 1.5;

/// Kernel contributions beyond this many bandwidths are dropped.
inline constexpr double kKdeCutoff = 8.0;

/// Moment order certified on the jump law before particles are evolved.
inline constexpr double kPideMomentOrder = 2.0;

/// Initial law phi(x) dx with a sampler and the weighted-norm certificate
/// integral phi^r (1 + |x|^2)^{(r-1) d} dx for the declared r.
class InitialDensity {
 public:
  /// N(mean, sd^2 I).
  static InitialDensity gaussian(Vec mean, double sd, double r = 3.0);
  /// Uniform on the ball of the given radius around the origin.
  static InitialDensity uniform_ball(int dim, double radius, double r = 3.0);

  int dim() const noexcept { return dim_; }
  const std::string& name() const noexcept { return name_; }
  double declared_r() const noexcept { return r_; }
  Vec sample(RandomStream& rng) const { return sampler_(rng); }
  double density(const Vec& x) const { return density_(x); }
  /// Certificate for the declared r, computed once at construction.
  double certificate() const noexcept { return certificate_; }

 private:
  InitialDensity() = default;
  int dim_ = 0;
  std::string name_;
  double r_ = 0.0;
  double certificate_ = 0.0;
  std::function<Vec(RandomStream&)> sampler_;
  std::function<double(const Vec&)> density_;
};

/// Gaussian kernel density estimate over unit-weight particles.
class DensityEstimate {
 public:
  DensityEstimate(std::vector<Vec> particles, double bandwidth, double time);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return particles_.size(); }
  double bandwidth() const noexcept { return h_; }
  double time() const noexcept { return t_; }
  const std::vector<Vec>& particles() const noexcept { return particles_; }

  double operator()(const Vec& x) const;
  /// Exact kernel mass inside the box [lower, upper].
  double box_mass(const Vec& lower, const Vec& upper) const;

 private:
  int dim_ = 0;
  std::vector<Vec> particles_;
  double h_ = 0.0;
  double t_ = 0.0;
  double norm_ = 0.0;
};

/// h = kKdeBandwidthConstant N^{-1/(d+4)}.
double default_bandwidth(std::size_t n, int dim);

/// Uniform midpoint grid on [-half_width, half_width]^d.
struct DensityGrid {
  int dim = 2;
  double half_width = 6.0;
  int per_axis = 64;

  double step() const { return 2.0 * half_width / per_axis; }
  double cell_volume() const;
  std::vector<Vec> nodes() const;
};

/// Values of a density on every grid node (parallel over nodes).
std::vector<double> evaluate_on_grid(const DensityEstimate& u, const DensityGrid& grid);

/// Sum |u - ref| cell volume over the grid.
double l1_distance(const std::vector<double>& values, const DensityGrid& grid,
                   const std::function<double(const Vec&)>& reference);

struct PideScheme {
  std::vector<double> time_grid;          // base grid the noise is sampled on
  std::vector<double> observation_times;  // subset of the base grid
  double delta = 1.0;                     // compensation radius for the tempered convention
};

/// The SDE realizing the generator of `spec`. Tempered: drift b-hat^delta
/// with jumps compensated on |y| < delta. Second order: drift b with all
/// jumps compensated.
std::pair<SdeModel, SchemeOptions> pide_model(const GeneratorSpec& spec, double delta);

/// Particle positions at the observation times, X_0 ~ init.
class PideSolution {
 public:
  int dim() const noexcept { return dim_; }
  std::size_t particles() const noexcept { return n_; }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t divergent() const noexcept { return divergent_; }
  bool excluded(std::size_t i) const { return excluded_.at(i) != 0; }

  Vec initial(std::size_t i) const;
  Vec position(std::size_t obs, std::size_t i) const;
  /// Number of jumps on (t_0, times()[obs]].
  int jump_count(std::size_t obs, std::size_t i) const { return jumps_.at(obs * n_ + i); }

  /// Non-excluded positions at an observation time, optionally only the first `limit` particles.
  std::vector<Vec> positions(std::size_t obs, std::size_t limit = SIZE_MAX) const;
  DensityEstimate density(std::size_t obs, double bandwidth = 0.0, std::size_t limit = SIZE_MAX) const;
  /// Particle average of g(X_t) with its standard error.
  Estimate average(std::size_t obs, const std::function<double(const Vec&)>& g) const;

 private:
  friend PideSolution solve_pide_particle(const GeneratorSpec&, const InitialDensity&, std::size_t,
                                          const PideScheme&, std::uint64_t);
  int dim_ = 0;
  std::size_t n_ = 0;
  std::size_t divergent_ = 0;
  std::vector<double> times_;
  std::vector<double> initial_;    // [particle][coord]
  std::vector<double> positions_;  // [obs][particle][coord]
  std::vector<int> jumps_;         // [obs][particle]
  std::vector<char> excluded_;     // per particle
};

/// Evolves N particles, particle i driven by noise stream i and an initial
/// point drawn from the Initial channel of the same stream. Requires
/// N >= 1000, the declared r above q* = q/(q-1) with a finite certificate,
/// and a certified jump moment of order kPideMomentOrder when jumps are present.
PideSolution solve_pide_particle(const GeneratorSpec& spec, const InitialDensity& init, std::size_t n,
                                 const PideScheme& scheme, std::uint64_t seed);

/// CSV: x1..xd, u, reference (when given).
void write_density_csv(std::ostream& out, const DensityGrid& grid, const std::vector<double>& values,
                       const std::function<double(const Vec&)>& reference = {});

}  // namespace flowjump
