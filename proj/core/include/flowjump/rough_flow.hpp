#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "flowjump/ensemble.hpp"
#include "flowjump/mollify.hpp"

namespace flowjump {

/// Frozen constants of the stability budget C1 + C2/delta * gap, calibrated
/// on the smooth corpus field (see tests/unit/test_rough_flow.cpp).
inline constexpr double kBudgetC1 = 0.1;
inline constexpr double kBudgetC2 = 0.02;

/// Mollified flows X^n for n in a dyadic ladder, all driven by the same
/// noise bank. Only the reductions the diagnostics need are kept: per
/// (path, level, point) the running sup of |X^n|, per (path, pair, point)
/// the running sup of |X^n - X^m|, and states at a few observation times.
class FlowSequence {
 public:
  static FlowSequence build(const SdeModel& base, std::vector<int> levels, InitialGrid grid,
                            std::vector<double> time_grid, std::uint64_t seed, std::size_t n_paths,
                            MollifierKernel kernel = MollifierKernel::Bump,
                            std::vector<double> observation_times = {0.25, 0.5, 0.75, 1.0});

  const std::vector<int>& levels() const noexcept { return levels_; }
  std::size_t paths() const noexcept { return n_paths_; }
  const InitialGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& observation_times() const noexcept { return observation_times_; }
  const SdeModel& base() const noexcept { return base_; }
  const SdeModel& level_model(std::size_t level_index) const { return models_.at(level_index); }
  std::size_t level_index(int n) const;
  std::size_t divergent_paths() const noexcept { return divergent_; }

  double sup_norm(std::size_t path, std::size_t level, std::size_t point) const;
  double sup_distance(std::size_t path, std::size_t a, std::size_t b, std::size_t point) const;
  Vec observed(std::size_t path, std::size_t level, std::size_t obs, std::size_t point) const;

 private:
  FlowSequence(SdeModel base) : base_(std::move(base)) {}
  std::size_t pair_index(std::size_t a, std::size_t b) const;

  SdeModel base_;
  std::vector<SdeModel> models_;
  std::vector<int> levels_;
  InitialGrid grid_;
  std::vector<double> time_grid_;
  std::vector<double> observation_times_;
  std::size_t n_paths_ = 0;
  std::size_t divergent_ = 0;
  std::vector<double> sup_norm_;      // [path][level][point]
  std::vector<double> sup_distance_;  // [path][pair][point]
  std::vector<double> observed_;      // [path][level][obs][point][coord]
};

/// Throws GateViolation unless beta_alpha > 1/(q - 1).
void check_rough_gate(const CoefficientField& field);

struct StabilityReport {
  int n = 0;
  int m = 0;
  double delta = 0.0;
  double R = 0.0;
  double psi = 0.0;       // E integral over G_R of log(sup|Z|^2/delta^2 + 1) dmu
  double psi_se = 0.0;
  double phi = 0.0;       // E integral of sup|Z| dmu
  double phi_se = 0.0;
  double g_mass = 0.0;    // E mu(G_R)
  double coefficient_gap = 0.0;  // ||b^n - b^m||_{L^q(B_R)} + ||sigma^n - sigma^m||^2_{L^{2q}(B_R)}
  double rhs_budget = 0.0;
  bool small_delta_regime = false;  // n, m > 4/delta
  bool empty_set = false;
};

StabilityReport stability_functional(const FlowSequence& seq, int n, int m, double delta, double R);

/// Per (path, point), checks that log(sup|Z|^2/delta^2 + 1) does not increase
/// along the sorted delta ladder. Returns the number of violations.
std::size_t psi_delta_violations(const FlowSequence& seq, int n, int m, std::vector<double> deltas, double R);

struct CauchyRow {
  int n = 0;
  int m = 0;
  double phi = 0.0;
  double phi_se = 0.0;
};

struct CauchyTable {
  std::vector<CauchyRow> rows;
  bool strictly_decreasing = false;
  bool below_threshold = false;
  bool converged = false;
};

CauchyTable cauchy_diagnostic(const FlowSequence& seq, double threshold);

struct AeFlowEntry {
  std::string name;
  double lhs = 0.0;   // sup_t E integral phi(X_t) dmu
  double norm = 0.0;  // ||phi||_{L^p_mu}
  double K = 0.0;
};

struct AeFlowReport {
  double p = 0.0;
  std::vector<AeFlowEntry> entries;
  double spread = 0.0;  // max K / min K
};

/// Requires p > 1 + 1/beta_alpha; uses the states stored at the
/// observation times of the given level.
AeFlowReport ae_flow_bound(const FlowSequence& seq, int level, const std::vector<NamedFunction>& family,
                           double p);

struct JumpIncrementReport {
  double worst_ratio = 0.0;  // max lhs / (4 (L1 + L1^2)); lhs <= 0 counted as 0
  double worst_excess = 0.0; // max lhs - 4 (L1 + L1^2)
  std::size_t samples = 0;
  bool pass = true;
};

/// Sweeps (x, z, y) samples: x in B_R, |z| log-spread in [delta/100, R],
/// y from the mark law. Requires n, m > 4/delta.
JumpIncrementReport jump_increment_sweep(const SdeModel& base, int n, int m, double delta, double R,
                            std::size_t samples, std::uint64_t seed,
                            MollifierKernel kernel = MollifierKernel::Bump);

/// E integral sup_t |X^{n,1} - X^{n,2}| dmu for two mollifier kernels under
/// the same noise.
Estimate uniqueness_replay(const SdeModel& base, int level, const InitialGrid& grid,
                           const std::vector<double>& time_grid, std::uint64_t seed, std::size_t n_paths);

/// CSV: n,m,delta,R,Psi,Phi,G_mass,rhs_budget.
void write_stability_csv(std::ostream& out, const std::vector<StabilityReport>& reports);

}  // namespace flowjump
