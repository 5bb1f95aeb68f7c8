#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>

#include "flowjump/types.hpp"

namespace flowjump {

/// Central finite-difference step used when a term has no closed-form
/// derivative. Scaled by max(1, |x_j|) per axis.
inline constexpr double kFiniteDifferenceStep = 1e-6;

using MarkFunction = std::function<double(const Vec&)>;

/// Drift b(t, x). gradient(t, x)(i, j) = d_j b^i.
class DriftTerm {
 public:
  virtual ~DriftTerm() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual Vec value(double t, const Vec& x) const = 0;
  virtual Mat gradient(double t, const Vec& x) const;
  virtual double divergence(double t, const Vec& x) const { return gradient(t, x).trace(); }
  virtual bool is_constant() const { return false; }
};

/// Diffusion sigma(t, x), a d x d matrix acting on d-dimensional noise.
class DiffusionTerm {
 public:
  virtual ~DiffusionTerm() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual Mat value(double t, const Vec& x) const = 0;
  virtual DiffusionGradient gradient(double t, const Vec& x) const;
  virtual bool is_constant() const { return false; }
};

/// Jump coefficient f(t, x, y). gradient(t, x, y)(i, j) = d_{x_j} f^i.
class JumpTerm {
 public:
  virtual ~JumpTerm() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual Vec value(double t, const Vec& x, const Vec& y) const = 0;
  virtual Mat gradient(double t, const Vec& x, const Vec& y) const;
  /// f does not depend on x (e.g. f = y).
  virtual bool is_state_independent() const { return false; }
};

/// Regularity metadata declared alongside a coefficient triple.
///
/// L1 bounds every entry of the jump Jacobian, L2 bounds |f(t, 0, y)|, and
/// alpha caps L1. `sobolev_q` is the declared exponent with grad b in
/// L^q_loc. The entrywise norm for L1 is the one the determinant remainder
/// bound is stated in, so the jump-size chain closes without extra constants.
struct Regularity {
  double alpha = 0.1;
  MarkFunction L1 = [](const Vec&) { return 0.0; };
  MarkFunction L2 = [](const Vec& y) { return y.norm(); };
  double sobolev_q = 2.0;
  bool drift_lipschitz = true;
  bool diffusion_lipschitz = true;
  bool jump_lipschitz = true;
};

/// The triple (b, sigma, f) with its regularity metadata. Immutable and
/// shareable across threads.
class CoefficientField {
 public:
  CoefficientField(std::shared_ptr<const DriftTerm> drift,
                   std::shared_ptr<const DiffusionTerm> diffusion,
                   std::shared_ptr<const JumpTerm> jump, Regularity regularity,
                   std::string name = {});

  int dim() const noexcept { return dim_; }
  const std::string& name() const noexcept { return name_; }
  const Regularity& regularity() const noexcept { return regularity_; }

  const DriftTerm& drift_term() const noexcept { return *drift_; }
  const DiffusionTerm& diffusion_term() const noexcept { return *diffusion_; }
  const JumpTerm& jump_term() const noexcept { return *jump_; }
  std::shared_ptr<const DriftTerm> drift_ptr() const noexcept { return drift_; }
  std::shared_ptr<const DiffusionTerm> diffusion_ptr() const noexcept { return diffusion_; }
  std::shared_ptr<const JumpTerm> jump_ptr() const noexcept { return jump_; }

  Vec drift(double t, const Vec& x) const { return drift_->value(t, x); }
  Mat diffusion(double t, const Vec& x) const { return diffusion_->value(t, x); }
  Vec jump(double t, const Vec& x, const Vec& y) const { return jump_->value(t, x, y); }

  /// a = sigma sigma^T.
  Mat diffusion_matrix(double t, const Vec& x) const;

  /// Same triple with a different drift (used by drift conversions).
  CoefficientField with_drift(std::shared_ptr<const DriftTerm> drift, std::string name) const;
  CoefficientField with_regularity(Regularity regularity) const;

 private:
  std::shared_ptr<const DriftTerm> drift_;
  std::shared_ptr<const DiffusionTerm> diffusion_;
  std::shared_ptr<const JumpTerm> jump_;
  Regularity regularity_;
  std::string name_;
  int dim_;
};

/// Result of spot-checking the declared jump bounds on sample points.
struct JumpBoundReport {
  double worst_gradient_ratio = 0.0;   // max |grad_x f| / L1 (entrywise)
  double worst_origin_ratio = 0.0;     // max |f(t,0,y)| / L2
  double worst_alpha_violation = 0.0;  // max L1 - min(alpha, L2), <= 0 when fine
  bool ok = true;
};

/// Checks |grad_x f(t,x,y)| <= L1(y) + tol, |f(t,0,y)| <= L2(y) + tol and
/// L1 <= alpha ^ L2 over the given samples.
JumpBoundReport check_jump_bounds(const CoefficientField& field, std::span<const Vec> xs,
                                  std::span<const Vec> ys, double t = 0.0, double tol = 1e-12);

/// Divergence of the drift; throws SingularPoint at declared singularities.
double divergence(const CoefficientField& field, double t, const Vec& x);
/// Gradient of the drift; throws SingularPoint at declared singularities.
Mat gradient(const CoefficientField& field, double t, const Vec& x);

/// mu(dx) = dx / (1 + |x|^2)^d.
class ReferenceMeasure {
 public:
  explicit ReferenceMeasure(int dim);
  int dim() const noexcept { return dim_; }
  double density(const Vec& x) const;
  /// pi^{d/2} Gamma(d/2) / Gamma(d).
  double total_mass() const;
  /// Radial quadrature of the density; independent of total_mass().
  double quadrature_mass() const;
  /// mu-mass outside the ball of radius r.
  double tail_mass(double radius) const;

 private:
  int dim_;
};

}  // namespace flowjump
