#include "flowjump/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

namespace flowjump {

namespace {

double fd_step(double xj) { return kFiniteDifferenceStep * std::max(1.0, std::abs(xj)); }

}  // namespace

Mat DriftTerm::gradient(double t, const Vec& x) const {
  const int d = dim();
  Mat g(d, d);
  for (int j = 0; j < d; ++j) {
    const double h = fd_step(x[j]);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g.col(j) = (value(t, xp) - value(t, xm)) / (2.0 * h);
  }
  return g;
}

DiffusionGradient DiffusionTerm::gradient(double t, const Vec& x) const {
  const int d = dim();
  DiffusionGradient g(d);
  for (int j = 0; j < d; ++j) {
    const double h = fd_step(x[j]);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g.by_axis[j] = (value(t, xp) - value(t, xm)) / (2.0 * h);
  }
  return g;
}

Mat JumpTerm::gradient(double t, const Vec& x, const Vec& y) const {
  const int d = dim();
  Mat g(d, d);
  for (int j = 0; j < d; ++j) {
    const double h = fd_step(x[j]);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g.col(j) = (value(t, xp, y) - value(t, xm, y)) / (2.0 * h);
  }
  return g;
}

CoefficientField::CoefficientField(std::shared_ptr<const DriftTerm> drift,
                                   std::shared_ptr<const DiffusionTerm> diffusion,
                                   std::shared_ptr<const JumpTerm> jump, Regularity regularity,
                                   std::string name)
    : drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      jump_(std::move(jump)),
      regularity_(std::move(regularity)),
      name_(std::move(name)) {
  if (!drift_ || !diffusion_ || !jump_) throw InvalidInput("CoefficientField: null term");
  dim_ = drift_->dim();
  if (dim_ < 1 || dim_ > kMaxDim) throw InvalidInput("CoefficientField: dimension out of range");
  if (diffusion_->dim() != dim_ || jump_->dim() != dim_)
    throw InvalidInput("CoefficientField: term dimensions disagree");
  if (!(regularity_.alpha > 0.0 && regularity_.alpha < 1.0))
    throw InvalidInput("CoefficientField: alpha must lie in (0, 1)");
  if (!(regularity_.sobolev_q > 1.0)) throw InvalidInput("CoefficientField: sobolev_q must exceed 1");
  if (!regularity_.L1 || !regularity_.L2) throw InvalidInput("CoefficientField: missing L1/L2");
  if (name_.empty()) name_ = drift_->name() + "/" + diffusion_->name() + "/" + jump_->name();
}

Mat CoefficientField::diffusion_matrix(double t, const Vec& x) const {
  const Mat s = diffusion_->value(t, x);
  return s * s.transpose();
}

CoefficientField CoefficientField::with_drift(std::shared_ptr<const DriftTerm> drift,
                                              std::string name) const {
  return CoefficientField(std::move(drift), diffusion_, jump_, regularity_, std::move(name));
}

CoefficientField CoefficientField::with_regularity(Regularity regularity) const {
  return CoefficientField(drift_, diffusion_, jump_, std::move(regularity), name_);
}

JumpBoundReport check_jump_bounds(const CoefficientField& field, std::span<const Vec> xs,
                                  std::span<const Vec> ys, double t, double tol) {
  JumpBoundReport report;
  const auto& reg = field.regularity();
  const Vec origin = Vec::Zero(field.dim());
  for (const Vec& y : ys) {
    const double l1 = reg.L1(y);
    const double l2 = reg.L2(y);
    report.worst_alpha_violation =
        std::max(report.worst_alpha_violation, l1 - std::min(reg.alpha, l2));
    if (l1 < -tol) report.ok = false;
    for (const Vec& x : xs) {
      const double g = field.jump_term().gradient(t, x, y).cwiseAbs().maxCoeff();
      if (g > l1 + tol) report.ok = false;
      if (l1 > 0.0) report.worst_gradient_ratio = std::max(report.worst_gradient_ratio, g / l1);
      else if (g > tol) report.worst_gradient_ratio = std::numeric_limits<double>::infinity();
    }
    const double f0 = field.jump(t, origin, y).norm();
    if (f0 > l2 + tol) report.ok = false;
    if (l2 > 0.0) report.worst_origin_ratio = std::max(report.worst_origin_ratio, f0 / l2);
  }
  if (report.worst_alpha_violation > tol) report.ok = false;
  return report;
}

double divergence(const CoefficientField& field, double t, const Vec& x) {
  return field.drift_term().divergence(t, x);
}

Mat gradient(const CoefficientField& field, double t, const Vec& x) {
  return field.drift_term().gradient(t, x);
}

ReferenceMeasure::ReferenceMeasure(int dim) : dim_(dim) {
  if (dim < 1) throw InvalidInput("ReferenceMeasure: dim must be positive");
}

double ReferenceMeasure::density(const Vec& x) const {
  return std::pow(1.0 + x.squaredNorm(), -dim_);
}

double ReferenceMeasure::total_mass() const {
  const double d = dim_;
  return std::pow(std::numbers::pi, d / 2.0) * std::tgamma(d / 2.0) / std::tgamma(d);
}

double ReferenceMeasure::quadrature_mass() const {
  // |S^{d-1}| * integral_0^inf r^{d-1} (1 + r^2)^{-d} dr
  const double d = dim_;
  const double sphere = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  boost::math::quadrature::exp_sinh<double> integrator;
  const double radial =
      integrator.integrate([d](double r) { return std::pow(r, d - 1.0) * std::pow(1.0 + r * r, -d); });
  return sphere * radial;
}

double ReferenceMeasure::tail_mass(double radius) const {
  if (radius <= 0.0) return total_mass();
  // Substituting s = r^2 / (1 + r^2) turns the radial integral into an
  // incomplete beta function: (|S^{d-1}|/2) B(d/2, d/2) (1 - I_s(d/2, d/2)).
  const double d = dim_;
  const double sphere = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  const double s = radius * radius / (1.0 + radius * radius);
  return 0.5 * sphere * boost::math::beta(d / 2.0, d / 2.0) *
         boost::math::ibetac(d / 2.0, d / 2.0, s);
}

}  // namespace flowjump
