#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowjump/rng.hpp"
#include "flowjump/types.hpp"

namespace flowjump {

/// A quadrature node of a probability law on R^d \ {0}.
struct MarkNode {
  Vec point;
  double weight = 0.0;
};

/// Normalized jump-mark distribution nu_t(dy) / nu_t(R^d \ {0}).
///
/// Discrete laws (fixed, symmetric pair) carry their atoms as exact
/// quadrature nodes. The radial shell law has density proportional to
/// |y|^(-d-kappa) on r_min <= |y| <= r_max, i.e. a stable-like radial
/// profile truncated away from the origin; its nodes come from a
/// Gauss-Legendre rule in the radius times a product rule on the sphere.
class MarkLaw {
 public:
  enum class Kind { Fixed, Symmetric, RadialShell };

  static MarkLaw fixed(Vec y0);
  static MarkLaw symmetric(Vec y0);
  static MarkLaw radial_shell(int dim, double r_min, double r_max, double kappa);

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  std::string id() const;

  Vec sample(RandomStream& rng) const;
  const std::vector<MarkNode>& nodes() const noexcept { return nodes_; }

  double expectation(const std::function<double(const Vec&)>& g) const;
  Vec expectation_vec(const std::function<Vec(const Vec&)>& g) const;

  /// Largest |y| in the support.
  double max_radius() const noexcept;

 private:
  MarkLaw(Kind kind, int dim) : kind_(kind), dim_(dim) {}
  void build_radial_nodes();

  Kind kind_;
  int dim_;
  Vec atom_;
  double r_min_ = 0.0;
  double r_max_ = 0.0;
  double kappa_ = 0.0;
  std::vector<MarkNode> nodes_;
};

/// Piecewise-constant jump rate lambda(t): rate `rates[k]` on
/// [breaks[k], breaks[k+1]), the last rate extending to +infinity.
class RatePath {
 public:
  static RatePath constant(double rate);
  static RatePath piecewise(std::vector<double> breaks, std::vector<double> rates);

  double rate(double t) const;
  /// Lambda(t) = integral of lambda over [0, t].
  double integrated(double t) const;
  double integrated(double a, double b) const { return integrated(b) - integrated(a); }
  /// Smallest t with Lambda(t) = level; +infinity if the level is never reached.
  double inverse(double level) const;
  bool is_zero() const;

  const std::vector<double>& breaks() const noexcept { return breaks_; }
  const std::vector<double>& rates() const noexcept { return rates_; }

 private:
  std::vector<double> breaks_;
  std::vector<double> rates_;
  std::vector<double> cumulative_;  // Lambda at each break
};

/// Time-dependent finite jump intensity nu_t(dy) = lambda(t) * law(dy).
struct LevyMeasureSpec {
  enum class Kind { FiniteActivityCompound, TruncatedRadial };

  Kind kind = Kind::FiniteActivityCompound;
  RatePath rate = RatePath::constant(0.0);
  MarkLaw marks = MarkLaw::fixed(Vec::Unit(2, 0));
  /// p -> integral over [0,1] x R^d of |y|^2 (1 + |y|^2)^p nu_s(dy) ds.
  std::map<double, double> moment_certificates;

  int dim() const noexcept { return marks.dim(); }

  static LevyMeasureSpec none(int dim);
  static LevyMeasureSpec compound(RatePath rate, MarkLaw marks);

  /// Computes and stores certificates for the given exponents; throws
  /// GateViolation if any is not finite.
  void certify(std::span<const double> exponents);
  /// Throws GateViolation unless a certificate with exponent >= p exists.
  void require_certificate(double p) const;
};

struct JumpEvent {
  double time = 0.0;
  Vec mark;
  std::size_t grid_index = 0;  // position of `time` in NoisePath::time_grid
};

/// One seed-addressed realization of Brownian increments and marked jumps.
///
/// `time_grid` is the union of the base grid and all jump times; Brownian
/// values at inserted jump times come from Brownian-bridge sampling so the
/// base-grid increments are unchanged by the insertion.
struct NoisePath {
  int dim = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::vector<double> time_grid;
  std::vector<Vec> increments;      // increments[i] = W(t_{i+1}) - W(t_i)
  std::vector<JumpEvent> jumps;     // sorted by time
  std::vector<int> jump_at;         // per grid point: index into jumps, or -1
  std::vector<char> on_base_grid;   // per grid point: 1 if it belongs to the base grid

  double start() const { return time_grid.front(); }
  double end() const { return time_grid.back(); }
  std::size_t steps() const { return increments.size(); }

  /// Keeps every `factor`-th base point plus all jump times; increments
  /// are summed, so the coarse path is the same Brownian realization.
  NoisePath coarsened(int factor) const;
};

/// Uniform grid t0, t0 + h, ..., t1 with `steps` intervals.
std::vector<double> uniform_grid(double t0, double t1, std::size_t steps);

/// Validates a time grid: at least one point, strictly increasing, inside
/// [0, 1]. Throws InvalidInput otherwise.
void validate_grid(std::span<const double> grid);

NoisePath sample_brownian(std::span<const double> grid, int dim, std::uint64_t seed,
                          std::uint64_t stream_id);

/// Jump events on (t0, t1] by time change of a unit-rate Poisson process.
std::vector<JumpEvent> sample_jumps(const LevyMeasureSpec& spec, double t0, double t1,
                                    std::uint64_t seed, std::uint64_t stream_id);

/// Brownian increments on the base grid plus jumps on (grid.front, grid.back],
/// merged into a jump-adapted grid.
NoisePath sample_noise(std::span<const double> base_grid, const LevyMeasureSpec& spec,
                       std::uint64_t seed, std::uint64_t stream_id);

/// integral_0^t integral g(y) nu_s(dy) ds. Throws InvalidInput if g is not
/// finite on the support of the mark law.
double compensator_integral(const LevyMeasureSpec& spec,
                            const std::function<double(const Vec&)>& g, double t);
Vec compensator_integral_vec(const LevyMeasureSpec& spec,
                             const std::function<Vec(const Vec&)>& g, double t);

struct ExponentialMomentResult {
  double mc_estimate = 0.0;
  double standard_error = 0.0;
  double closed_form = 0.0;
  std::size_t paths = 0;
};

/// Monte Carlo estimate of E exp(sum over jumps of L(mark)^2) next to the
/// closed form exp(integral (e^{L^2} - 1) nu ds). `bound` is the declared
/// sup |L|; a violation on the mark support is rejected.
ExponentialMomentResult exponential_moment_check(const std::function<double(const Vec&)>& L,
                                                 double bound, const LevyMeasureSpec& spec,
                                                 double t, std::size_t n_paths,
                                                 std::uint64_t seed);

/// Text export: CSV sections [meta], [grid], [increments], [jumps].
void write_noise_csv(std::ostream& out, const NoisePath& path);
NoisePath read_noise_csv(std::istream& in);

}  // namespace flowjump
