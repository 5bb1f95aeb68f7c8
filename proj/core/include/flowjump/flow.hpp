#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "flowjump/coefficients.hpp"
#include "flowjump/noise.hpp"

namespace flowjump {

/// Coefficients plus the jump intensity they are driven by.
struct SdeModel {
  CoefficientField field;
  LevyMeasureSpec levy;

  int dim() const noexcept { return field.dim(); }
  /// Throws InvalidInput if the field and the mark law disagree on d.
  void validate() const;
};

enum class CompensatorMode {
  Full,        // jumps integrate against the compensated measure
  None,        // raw counting measure, no drift correction
  SmallJumps,  // compensate only marks with |y| < small_jump_radius
};

struct SchemeOptions {
  CompensatorMode compensator = CompensatorMode::Full;
  double small_jump_radius = 1.0;
  bool jacobian = false;
  bool decomposition = false;  // implies jacobian
  bool enforce_jump_gate = true;
};

/// Everything one trajectory carries between grid points.
struct FlowState {
  Vec x;
  Vec x_left;  // left limit at the current grid time
  Mat J;
  double A1 = 0.0;
  double A2 = 0.0;
  double Mc = 0.0;
  double Md = 0.0;
  double qv = 0.0;            // <M^c>
  double log_jump_terms = 0.0;  // sum of log(1 + dM) - dM
  double max_abs_dM = 0.0;
  std::size_t jumps = 0;
  std::size_t dM_bound_violations = 0;
  bool divergent = false;

  /// exp(A1 + A2 + Mc + Md - qv/2) prod (1 + dM) e^{-dM}.
  double det_explicit() const;
  double det_direct() const;
};

/// Jump-adapted Euler stepper. Between grid points the state moves by
/// b h + sigma dW minus the compensator slice evaluated at the left point;
/// at a jump time the mark is applied exactly to the left limit.
class FlowStepper {
 public:
  FlowStepper(const SdeModel& model, SchemeOptions options);

  FlowState init(const Vec& x0) const;
  /// Moves `state` from noise.time_grid[step] to noise.time_grid[step + 1].
  void advance(FlowState& state, const NoisePath& noise, std::size_t step) const;
  /// Runs every step of `noise`.
  void run(FlowState& state, const NoisePath& noise) const;

  const SdeModel& model() const noexcept { return *model_; }
  const SchemeOptions& options() const noexcept { return options_; }
  double beta() const noexcept { return beta_; }

 private:
  const SdeModel* model_;
  SchemeOptions options_;
  double beta_ = 0.0;  // 0 when d < 2 (no jump-size gate)
};

struct DetDecomposition {
  std::vector<double> A1, A2, Mc, Md, qv, det_explicit, det_direct;
};

struct JumpRecord {
  double time = 0.0;
  Vec mark;
  Vec left;
  Vec right;
  double dM = 0.0;
};

/// A fully recorded path: one entry per point of the jump-adapted grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> left_limits;
  std::vector<Mat> jacobians;
  DetDecomposition decomposition;
  std::vector<JumpRecord> jumps;
  bool divergent = false;
  std::size_t dM_bound_violations = 0;
  double max_abs_dM = 0.0;
};

Trajectory simulate_flow(const SdeModel& model, const NoisePath& noise, const Vec& x0,
                         SchemeOptions options = {});
Trajectory variational_jacobian(const SdeModel& model, const NoisePath& noise, const Vec& x0,
                                SchemeOptions options = {});
Trajectory determinant_decomposition(const SdeModel& model, const NoisePath& noise, const Vec& x0,
                                     SchemeOptions options = {});

/// Backward density ratio (1+|x|^2)^d / (1+|X|^2)^d det J.
double backward_ratio(const Vec& x, const Vec& X, double det_J);

/// Forward ratio for an affine flow X(x) = M x + c, through the inverse map.
double forward_ratio_affine(const Mat& M, const Vec& c, const Vec& x);

/// CSV columns: t, x1..xd, det_direct, det_explicit, A1, A2, Mc, Md.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace flowjump
