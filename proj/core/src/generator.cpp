#include "flowjump/generator.hpp"

#include <cmath>

#include "flowjump/corpus.hpp"

namespace flowjump {

namespace {

class ConstantFunction final : public TestFunction {
 public:
  ConstantFunction(int dim, double c) : dim_(dim), c_(c) {}
  std::string name() const override { return "constant"; }
  double value(const Vec&) const override { return c_; }
  Vec gradient(const Vec&) const override { return Vec::Zero(dim_); }
  Mat hessian(const Vec&) const override { return Mat::Zero(dim_, dim_); }

 private:
  int dim_;
  double c_;
};

class LinearFunction final : public TestFunction {
 public:
  explicit LinearFunction(Vec theta) : theta_(std::move(theta)) {}
  std::string name() const override { return "linear"; }
  double value(const Vec& x) const override { return theta_.dot(x); }
  Vec gradient(const Vec&) const override { return theta_; }
  Mat hessian(const Vec&) const override { return Mat::Zero(theta_.size(), theta_.size()); }

 private:
  Vec theta_;
};

class TrigFunction final : public TestFunction {
 public:
  TrigFunction(Vec theta, bool is_sine) : theta_(std::move(theta)), sine_(is_sine) {}
  std::string name() const override { return sine_ ? "sine" : "cosine"; }
  double value(const Vec& x) const override {
    const double s = theta_.dot(x);
    return sine_ ? std::sin(s) : std::cos(s);
  }
  Vec gradient(const Vec& x) const override {
    const double s = theta_.dot(x);
    return (sine_ ? std::cos(s) : -std::sin(s)) * theta_;
  }
  Mat hessian(const Vec& x) const override { return -value(x) * (theta_ * theta_.transpose()); }

 private:
  Vec theta_;
  bool sine_;
};

class GaussianFunction final : public TestFunction {
 public:
  GaussianFunction(Vec center, double s) : c_(std::move(center)), s2_(s * s) {}
  std::string name() const override { return "gaussian"; }
  double value(const Vec& x) const override { return std::exp(-(x - c_).squaredNorm() / (2.0 * s2_)); }
  Vec gradient(const Vec& x) const override { return -value(x) / s2_ * (x - c_); }
  Mat hessian(const Vec& x) const override {
    const Vec z = x - c_;
    const int d = static_cast<int>(z.size());
    return value(x) * (z * z.transpose() / (s2_ * s2_) - Mat::Identity(d, d) / s2_);
  }

 private:
  Vec c_;
  double s2_;
};

class SmoothedSquare final : public TestFunction {
 public:
  SmoothedSquare(int dim, double R) : dim_(dim), R2_(R * R) {}
  std::string name() const override { return "smoothed_square"; }
  double value(const Vec& x) const override { return R2_ * -std::expm1(-x.squaredNorm() / R2_); }
  Vec gradient(const Vec& x) const override { return 2.0 * std::exp(-x.squaredNorm() / R2_) * x; }
  Mat hessian(const Vec& x) const override {
    const double e = std::exp(-x.squaredNorm() / R2_);
    return e * (2.0 * Mat::Identity(dim_, dim_) - 4.0 / R2_ * (x * x.transpose()));
  }

 private:
  int dim_;
  double R2_;
};

class BumpFunction final : public TestFunction {
 public:
  BumpFunction(Vec center, double r) : c_(std::move(center)), r2_(r * r) {}
  std::string name() const override { return "bump"; }
  double value(const Vec& x) const override {
    const double u = 1.0 - (x - c_).squaredNorm() / r2_;
    return u > 0.0 ? std::exp(-1.0 / u) : 0.0;
  }
  Vec gradient(const Vec& x) const override {
    const Vec z = x - c_;
    const double u = 1.0 - z.squaredNorm() / r2_;
    if (u <= 0.0) return Vec::Zero(z.size());
    return std::exp(-1.0 / u) / (u * u) * (-2.0 / r2_) * z;
  }
  Mat hessian(const Vec& x) const override {
    const Vec z = x - c_;
    const int d = static_cast<int>(z.size());
    const double u = 1.0 - z.squaredNorm() / r2_;
    if (u <= 0.0) return Mat::Zero(d, d);
    const double phi = std::exp(-1.0 / u);
    const Vec du = (-2.0 / r2_) * z;
    const double k = 1.0 / (u * u * u * u) - 2.0 / (u * u * u);
    return phi * (k * (du * du.transpose()) - 2.0 / (r2_ * u * u) * Mat::Identity(d, d));
  }

 private:
  Vec c_;
  double r2_;
};

/// base(t, x) + rate(t) v: a drift shifted by a multiple of the jump rate.
class RateShiftedDrift final : public DriftTerm {
 public:
  RateShiftedDrift(std::shared_ptr<const DriftTerm> base, RatePath rate, Vec v, std::string tag)
      : base_(std::move(base)), rate_(std::move(rate)), v_(std::move(v)), tag_(std::move(tag)) {}
  int dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name() + "+" + tag_; }
  Vec value(double t, const Vec& x) const override { return base_->value(t, x) + rate_.rate(t) * v_; }
  Mat gradient(double t, const Vec& x) const override { return base_->gradient(t, x); }
  double divergence(double t, const Vec& x) const override { return base_->divergence(t, x); }
  bool is_constant() const override { return base_->is_constant() && rate_.rates().size() <= 1; }
  const std::string& tag() const noexcept { return tag_; }
  std::shared_ptr<const DriftTerm> base() const { return base_; }

 private:
  std::shared_ptr<const DriftTerm> base_;
  RatePath rate_;
  Vec v_;
  std::string tag_;
};

constexpr const char* kToSecondOrder = "tempered_to_second_order";
constexpr const char* kToTempered = "second_order_to_tempered";

bool is_additive(const JumpTerm& jump) {
  return dynamic_cast<const AdditiveJump*>(&jump) != nullptr;
}

void require_additive(const GeneratorSpec& spec, const char* who) {
  if (!spec.levy.rate.is_zero() && !is_additive(spec.field.jump_term()))
    throw InvalidInput(std::string(who) + ": tempered convention needs additive jumps f = y");
}

/// Mark-law average of y |y|^2 / (1 + |y|^2), or of the tail term.
Vec mark_average(const LevyMeasureSpec& levy, double delta) {
  return levy.marks.expectation_vec([&](const Vec& y) -> Vec {
    const double r2 = y.squaredNorm();
    if (std::sqrt(r2) < delta) return (r2 / (1.0 + r2)) * y;
    return (-1.0 / (1.0 + r2)) * y;
  });
}

}  // namespace

std::shared_ptr<const TestFunction> TestFunction::constant(int dim, double c) {
  return std::make_shared<ConstantFunction>(dim, c);
}
std::shared_ptr<const TestFunction> TestFunction::linear(Vec theta) {
  return std::make_shared<LinearFunction>(std::move(theta));
}
std::shared_ptr<const TestFunction> TestFunction::cosine(Vec theta) {
  return std::make_shared<TrigFunction>(std::move(theta), false);
}
std::shared_ptr<const TestFunction> TestFunction::sine(Vec theta) {
  return std::make_shared<TrigFunction>(std::move(theta), true);
}
std::shared_ptr<const TestFunction> TestFunction::gaussian(Vec center, double s) {
  if (!(s > 0.0)) throw InvalidInput("TestFunction::gaussian: width must be positive");
  return std::make_shared<GaussianFunction>(std::move(center), s);
}
std::shared_ptr<const TestFunction> TestFunction::smoothed_square(int dim, double R) {
  if (!(R > 0.0)) throw InvalidInput("TestFunction::smoothed_square: R must be positive");
  return std::make_shared<SmoothedSquare>(dim, R);
}
std::shared_ptr<const TestFunction> TestFunction::bump(Vec center, double r) {
  if (!(r > 0.0)) throw InvalidInput("TestFunction::bump: radius must be positive");
  return std::make_shared<BumpFunction>(std::move(center), r);
}

double apply_generator(const GeneratorSpec& spec, const TestFunction& phi, double t, const Vec& x) {
  const Mat a = spec.field.diffusion_matrix(t, x);
  const Mat H = phi.hessian(x);
  const Vec g = phi.gradient(x);
  double out = 0.5 * a.cwiseProduct(H).sum() + spec.field.drift(t, x).dot(g);
  const double rate = spec.levy.rate.rate(t);
  if (rate == 0.0) return out;
  const double phi_x = phi.value(x);
  double jump = 0.0;
  if (spec.convention == TruncationConvention::Tempered) {
    require_additive(spec, "apply_generator");
    for (const auto& node : spec.levy.marks.nodes()) {
      const Vec& y = node.point;
      jump += node.weight * (phi.value(x + y) - phi_x - y.dot(g) / (1.0 + y.squaredNorm()));
    }
  } else {
    for (const auto& node : spec.levy.marks.nodes()) {
      const Vec f = spec.field.jump(t, x, node.point);
      jump += node.weight * (phi.value(x + f) - phi_x - f.dot(g));
    }
  }
  return out + rate * jump;
}

std::shared_ptr<const DriftTerm> drift_conversion(const GeneratorSpec& spec, double delta) {
  if (!(delta > 0.0)) throw InvalidInput("drift_conversion: delta must be positive");
  if (spec.levy.rate.is_zero()) return spec.field.drift_ptr();
  require_additive(spec, "drift_conversion");
  return std::make_shared<RateShiftedDrift>(spec.field.drift_ptr(), spec.levy.rate,
                                            mark_average(spec.levy, delta), "compensated_drift");
}

GeneratorSpec convert_convention(const GeneratorSpec& spec) {
  GeneratorSpec out = spec;
  const bool to_second = spec.convention == TruncationConvention::Tempered;
  out.convention = to_second ? TruncationConvention::SecondOrder : TruncationConvention::Tempered;
  if (spec.levy.rate.is_zero()) return out;
  require_additive(spec, "convert_convention");
  // Undo a previous conversion exactly instead of stacking shifts.
  if (const auto* prev = dynamic_cast<const RateShiftedDrift*>(&spec.field.drift_term());
      prev && prev->tag() == (to_second ? kToTempered : kToSecondOrder)) {
    out.field = spec.field.with_drift(prev->base(), spec.field.name());
    return out;
  }
  // Full compensation with this drift equals the tempered generator with b.
  Vec v = mark_average(spec.levy, INFINITY);
  if (!to_second) v = -v;
  auto drift = std::make_shared<RateShiftedDrift>(spec.field.drift_ptr(), spec.levy.rate, std::move(v),
                                                  to_second ? kToSecondOrder : kToTempered);
  out.field = spec.field.with_drift(std::move(drift), spec.field.name());
  return out;
}

std::complex<double> levy_symbol(const LevyMeasureSpec& levy, double t, const Vec& theta) {
  std::complex<double> out(-0.5 * theta.squaredNorm(), 0.0);
  const double rate = levy.rate.rate(t);
  if (rate == 0.0) return out;
  std::complex<double> acc(0.0, 0.0);
  for (const auto& node : levy.marks.nodes()) {
    const double s = theta.dot(node.point);
    acc += node.weight * std::complex<double>(std::cos(s) - 1.0, std::sin(s) - s / (1.0 + node.point.squaredNorm()));
  }
  return out + rate * acc;
}

}  // namespace flowjump
