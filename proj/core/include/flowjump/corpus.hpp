#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "flowjump/coefficients.hpp"

namespace flowjump {

class ZeroDrift final : public DriftTerm {
 public:
  explicit ZeroDrift(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  std::string name() const override { return "zero"; }
  Vec value(double, const Vec&) const override { return Vec::Zero(dim_); }
  Mat gradient(double, const Vec&) const override { return Mat::Zero(dim_, dim_); }
  bool is_constant() const override { return true; }

 private:
  int dim_;
};

class ConstantDrift final : public DriftTerm {
 public:
  explicit ConstantDrift(Vec c) : c_(std::move(c)) {}
  int dim() const override { return static_cast<int>(c_.size()); }
  std::string name() const override { return "constant"; }
  Vec value(double, const Vec&) const override { return c_; }
  Mat gradient(double, const Vec&) const override { return Mat::Zero(dim(), dim()); }
  bool is_constant() const override { return true; }

 private:
  Vec c_;
};

/// b(x) = A x.
class LinearDrift final : public DriftTerm {
 public:
  explicit LinearDrift(Mat a);
  int dim() const override { return static_cast<int>(a_.rows()); }
  std::string name() const override { return "linear"; }
  Vec value(double, const Vec& x) const override { return a_ * x; }
  Mat gradient(double, const Vec&) const override { return a_; }
  double divergence(double, const Vec&) const override { return a_.trace(); }
  const Mat& matrix() const noexcept { return a_; }

 private:
  Mat a_;
};

/// b(x) = x/|x| off the origin and 0 at the origin. The derivative is
/// singular at 0; div b = (d-1)/|x| elsewhere.
class UnitRadialDrift final : public DriftTerm {
 public:
  explicit UnitRadialDrift(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  std::string name() const override { return "unit_radial"; }
  Vec value(double, const Vec& x) const override;
  Mat gradient(double, const Vec& x) const override;
  double divergence(double, const Vec& x) const override;

 private:
  int dim_;
};

/// b_i = 0.5 sin(x_{i+1}) + 0.3 cos(x_i), indices cyclic. Bounded, smooth
/// and globally Lipschitz.
class SmoothCorpusDrift final : public DriftTerm {
 public:
  explicit SmoothCorpusDrift(int dim, double scale = 1.0) : dim_(dim), scale_(scale) {}
  int dim() const override { return dim_; }
  std::string name() const override { return "smooth"; }
  Vec value(double, const Vec& x) const override;
  Mat gradient(double, const Vec& x) const override;

 private:
  int dim_;
  double scale_;
};

/// Divergence-free swirl k e^{-|x|^2/2} (-x2, x1) in d = 2.
class SwirlBumpDrift final : public DriftTerm {
 public:
  explicit SwirlBumpDrift(double k) : k_(k) {}
  int dim() const override { return 2; }
  std::string name() const override { return "swirl"; }
  Vec value(double, const Vec& x) const override;
  Mat gradient(double, const Vec& x) const override;
  double divergence(double, const Vec&) const override { return 0.0; }

 private:
  double k_;
};

/// base(t, x) + shift.
class ShiftedDrift final : public DriftTerm {
 public:
  ShiftedDrift(std::shared_ptr<const DriftTerm> base, Vec shift);
  int dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name() + "+shift"; }
  Vec value(double t, const Vec& x) const override { return base_->value(t, x) + shift_; }
  Mat gradient(double t, const Vec& x) const override { return base_->gradient(t, x); }
  double divergence(double t, const Vec& x) const override { return base_->divergence(t, x); }
  bool is_constant() const override { return base_->is_constant(); }
  const Vec& shift() const noexcept { return shift_; }
  const DriftTerm& base() const noexcept { return *base_; }

 private:
  std::shared_ptr<const DriftTerm> base_;
  Vec shift_;
};

/// Bilinear interpolation of a drift sampled on a rectangular 2-D grid;
/// constant extrapolation outside the table.
class TabulatedDrift2D final : public DriftTerm {
 public:
  TabulatedDrift2D(std::vector<double> xs, std::vector<double> ys, std::vector<Vec> values);
  /// CSV with header x1,x2,b1,b2; rows may come in any order but must fill
  /// the tensor grid exactly.
  static std::shared_ptr<TabulatedDrift2D> load_csv(const std::string& path);

  int dim() const override { return 2; }
  std::string name() const override { return "tabulated"; }
  Vec value(double, const Vec& x) const override;

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<Vec> values_;  // row-major in (x index, y index)
};

class ConstantDiffusion final : public DiffusionTerm {
 public:
  explicit ConstantDiffusion(Mat sigma) : sigma_(std::move(sigma)) {}
  static std::shared_ptr<ConstantDiffusion> scaled_identity(int dim, double s);
  int dim() const override { return static_cast<int>(sigma_.rows()); }
  std::string name() const override { return "constant"; }
  Mat value(double, const Vec&) const override { return sigma_; }
  DiffusionGradient gradient(double, const Vec&) const override { return DiffusionGradient(dim()); }
  bool is_constant() const override { return true; }

 private:
  Mat sigma_;
};

/// sigma^{ik}(x) = s0 delta_ik + eps sin(x_i + 2 x_k).
class SmoothCorpusDiffusion final : public DiffusionTerm {
 public:
  SmoothCorpusDiffusion(int dim, double s0, double eps) : dim_(dim), s0_(s0), eps_(eps) {}
  int dim() const override { return dim_; }
  std::string name() const override { return "smooth"; }
  Mat value(double, const Vec& x) const override;
  DiffusionGradient gradient(double, const Vec& x) const override;

 private:
  int dim_;
  double s0_;
  double eps_;
};

class ZeroJump final : public JumpTerm {
 public:
  explicit ZeroJump(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  std::string name() const override { return "zero"; }
  Vec value(double, const Vec&, const Vec&) const override { return Vec::Zero(dim_); }
  Mat gradient(double, const Vec&, const Vec&) const override { return Mat::Zero(dim_, dim_); }
  bool is_state_independent() const override { return true; }

 private:
  int dim_;
};

/// f(t, x, y) = y.
class AdditiveJump final : public JumpTerm {
 public:
  explicit AdditiveJump(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  std::string name() const override { return "additive"; }
  Vec value(double, const Vec&, const Vec& y) const override { return y; }
  Mat gradient(double, const Vec&, const Vec&) const override { return Mat::Zero(dim_, dim_); }
  bool is_state_independent() const override { return true; }

 private:
  int dim_;
};

/// f_i = y_i + c(y) sin(x_i + x_{i+1}/2) with c(y) = a |y| / (1 + |y|).
/// Every entry of grad_x f is bounded by c(y) <= a, and f(t, 0, y) = y.
class SmoothCorpusJump final : public JumpTerm {
 public:
  SmoothCorpusJump(int dim, double a);
  int dim() const override { return dim_; }
  std::string name() const override { return "smooth"; }
  Vec value(double, const Vec& x, const Vec& y) const override;
  Mat gradient(double, const Vec& x, const Vec& y) const override;
  double amplitude(const Vec& y) const { return a_ * y.norm() / (1.0 + y.norm()); }

 private:
  int dim_;
  double a_;
};

/// Named corpus entry: drift, diffusion and jump ids plus numeric parameters.
///
/// drift: zero | constant (c) | linear (a, or a11 a12 a21 a22) | unit_radial |
///        smooth (drift_scale) | swirl (k) | tabulated (table)
/// diffusion: zero | constant (sigma) | smooth (s0, eps)
/// jump: zero | additive | smooth (jump_amplitude)
struct FieldSpec {
  int dim = 2;
  std::string drift = "zero";
  std::string diffusion = "zero";
  std::string jump = "zero";
  std::map<std::string, double> params;
  std::string table;
  double alpha = 0.1;
  double sobolev_q = 2.0;

  double param(const std::string& key, double fallback) const;
};

CoefficientField make_field(const FieldSpec& spec);

std::shared_ptr<const DriftTerm> make_drift(const FieldSpec& spec);
std::shared_ptr<const DiffusionTerm> make_diffusion(const FieldSpec& spec);
std::shared_ptr<const JumpTerm> make_jump(const FieldSpec& spec);

}  // namespace flowjump
