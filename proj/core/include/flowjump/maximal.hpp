#pragma once

#include <array>
#include <functional>
#include <vector>

#include "flowjump/types.hpp"

namespace flowjump {

/// Scalar field sampled on a uniform tensor grid (d = 1, 2 or 3). Ball
/// averages are discrete: the mean over grid nodes inside the ball.
class SampledField {
 public:
  SampledField(int dim, Vec lower, double step, std::array<int, 3> counts, std::vector<double> values);

  /// Samples phi on the cube [-half_width, half_width]^d with the given step.
  static SampledField sample(int dim, double half_width, double step,
                             const std::function<double(const Vec&)>& phi);

  int dim() const noexcept { return dim_; }
  double step() const noexcept { return step_; }
  std::size_t size() const noexcept { return values_.size(); }
  Vec node(std::size_t index) const;
  double value(std::size_t index) const { return values_[index]; }
  double cell_volume() const;
  double max_abs() const;

  /// Mean of the samples at nodes with |node - x| <= r; 0 if there are none.
  double ball_average(const Vec& x, double r) const;

  SampledField map(const std::function<double(double)>& g) const;

 private:
  int dim_;
  Vec lower_;
  double step_;
  std::array<int, 3> counts_;
  std::vector<double> values_;
  std::vector<double> prefix_;  // running sums along axis 0, one extra slot per row

  std::size_t flat(int i0, int i1, int i2) const {
    return (static_cast<std::size_t>(i2) * counts_[1] + i1) * counts_[0] + i0;
  }
};

inline constexpr int kMaximalRadii = 32;

/// Local maximal function sup_{0<r<R} of ball averages, over `radii`
/// log-spaced radii in (4 step, R]. Rejects grids with step > R/16.
double local_maximal_function(const SampledField& phi, double R, const Vec& x, int radii = kMaximalRadii);

struct MorreyReport {
  double ratio = 0.0;
  double constant = 0.0;
  bool pass = true;
};

/// |phi(x) - phi(y)| / (|x - y| (M_R|grad phi|(x) + M_R|grad phi|(y))),
/// asserted below `constant`. The ratio is 0 when x = y.
MorreyReport morrey_pointwise_check(const std::function<double(const Vec&)>& phi,
                                    const SampledField& grad_norm, const Vec& x, const Vec& y,
                                    double R, double constant);

/// Frozen constant for the L^p maximal inequality on the discrete grid,
/// calibrated on indicator, Gaussian and algebraic-decay profiles (d = 2, p = 2).
inline constexpr double kMaximalLpConstant = 1.5;

struct MaximalLpReport {
  double lhs = 0.0;       // ||M_R |phi| ||_{L^p(B_N)}
  double rhs = 0.0;       // C ||phi||_{L^p(B_{N+R})}
  double raw_ratio = 0.0; // lhs / ||phi||_{L^p(B_{N+R})}
  bool pass = true;
};

MaximalLpReport maximal_lp_bound_check(const SampledField& phi, double N, double R, double p,
                                       double constant = kMaximalLpConstant);

}  // namespace flowjump
