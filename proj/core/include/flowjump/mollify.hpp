#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "flowjump/coefficients.hpp"

namespace flowjump {

enum class MollifierKernel {
  Bump,        // exp(-1 / (1 - |z|^2))
  Polynomial,  // (1 - |z|^2)^4
};

/// Discrete mollifier on the unit ball: order-8 Gauss tensor nodes with
/// nodes outside B_1 dropped. Weights sum to one and the gradient weights
/// satisfy sum_k g_k^j z_k^i = -delta_ij, so affine fields are reproduced
/// exactly by both the value and the gradient of the convolution.
struct MollifierRule {
  int dim = 0;
  MollifierKernel kernel = MollifierKernel::Bump;
  std::vector<Vec> nodes;
  std::vector<double> weights;
  std::vector<Vec> grad_weights;
  double raw_mass = 0.0;  // quadrature mass of the unnormalized kernel before rescaling

  /// Cached per (dim, kernel); thread-safe.
  static const MollifierRule& get(int dim, MollifierKernel kernel);
};

/// Smooth cutoff chi with chi = 1 on B_1, chi = 0 off B_2.
double cutoff(double r);
double cutoff_derivative(double r);

class MollifiedDrift final : public DriftTerm {
 public:
  MollifiedDrift(std::shared_ptr<const DriftTerm> base, int level, MollifierKernel kernel);
  int dim() const override { return base_->dim(); }
  std::string name() const override;
  Vec value(double t, const Vec& x) const override;
  Mat gradient(double t, const Vec& x) const override;
  int level() const noexcept { return level_; }
  /// b * rho_n without the cutoff.
  Vec convolved(double t, const Vec& x) const;

 private:
  std::shared_ptr<const DriftTerm> base_;
  int level_;
  const MollifierRule* rule_;
};

class MollifiedDiffusion final : public DiffusionTerm {
 public:
  MollifiedDiffusion(std::shared_ptr<const DiffusionTerm> base, int level, MollifierKernel kernel);
  int dim() const override { return base_->dim(); }
  std::string name() const override;
  Mat value(double t, const Vec& x) const override;
  DiffusionGradient gradient(double t, const Vec& x) const override;
  bool is_constant() const override { return base_->is_constant(); }

 private:
  std::shared_ptr<const DiffusionTerm> base_;
  int level_;
  const MollifierRule* rule_;
};

class MollifiedJump final : public JumpTerm {
 public:
  MollifiedJump(std::shared_ptr<const JumpTerm> base, int level, MollifierKernel kernel);
  int dim() const override { return base_->dim(); }
  std::string name() const override;
  Vec value(double t, const Vec& x, const Vec& y) const override;
  Mat gradient(double t, const Vec& x, const Vec& y) const override;
  bool is_state_independent() const override { return base_->is_state_independent(); }

 private:
  std::shared_ptr<const JumpTerm> base_;
  int level_;
  const MollifierRule* rule_;
};

/// (b * rho_n) chi_n, sigma * rho_n, f * rho_n. Constant and
/// state-independent terms pass through unconvolved. The regularity record
/// keeps L1 and doubles L2, matching the a-priori bounds on the mollified
/// jump coefficient.
CoefficientField mollify(const CoefficientField& field, int n,
                         MollifierKernel kernel = MollifierKernel::Bump);

/// (integral over B_R of |g|^q)^(1/q) by polar quadrature with radial
/// panels refined geometrically towards the origin. d in {1, 2, 3}.
double lq_norm_on_ball(const std::function<double(const Vec&)>& g, int dim, double radius, double q);

/// ||a - b||_{L^q(B_R)} for two drifts at time t.
double drift_lq_distance(const DriftTerm& a, const DriftTerm& b, double q, double radius, double t = 0.0);
/// ||sigma_a - sigma_b||_{L^q(B_R)} with the Frobenius norm pointwise.
double diffusion_lq_distance(const DiffusionTerm& a, const DiffusionTerm& b, double q, double radius,
                             double t = 0.0);

}  // namespace flowjump
