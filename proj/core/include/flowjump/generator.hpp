#pragma once

#include <complex>
#include <memory>
#include <string>

#include "flowjump/coefficients.hpp"
#include "flowjump/noise.hpp"

namespace flowjump {

/// How the first-order part of the jump integrand is truncated.
enum class TruncationConvention {
  SecondOrder,  // phi(x+f) - phi(x) - <f, grad phi>
  Tempered,     // phi(x+y) - phi(x) - <y, grad phi> / (1 + |y|^2)
};

struct GeneratorSpec {
  CoefficientField field;
  LevyMeasureSpec levy;
  TruncationConvention convention = TruncationConvention::Tempered;

  int dim() const noexcept { return field.dim(); }
};

/// Smooth scalar test function with analytic first and second derivatives.
class TestFunction {
 public:
  virtual ~TestFunction() = default;
  virtual std::string name() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual Mat hessian(const Vec& x) const = 0;

  static std::shared_ptr<const TestFunction> constant(int dim, double c);
  static std::shared_ptr<const TestFunction> linear(Vec theta);
  /// cos(<theta, x>) or sin(<theta, x>).
  static std::shared_ptr<const TestFunction> cosine(Vec theta);
  static std::shared_ptr<const TestFunction> sine(Vec theta);
  /// exp(-|x - c|^2 / (2 s^2)).
  static std::shared_ptr<const TestFunction> gaussian(Vec center, double s);
  /// R^2 (1 - exp(-|x|^2 / R^2)), a bounded surrogate of |x|^2.
  static std::shared_ptr<const TestFunction> smoothed_square(int dim, double R);
  /// exp(-1 / (1 - |x - c|^2 / r^2)) inside the ball, 0 outside.
  static std::shared_ptr<const TestFunction> bump(Vec center, double r);
};

/// L_t phi(x) = a^{ij}/2 d_ij phi + b . grad phi + jump integral over the
/// finite mark law, with the truncation term of spec.convention. The
/// tempered convention is defined for additive jumps (f = y) only.
double apply_generator(const GeneratorSpec& spec, const TestFunction& phi, double t, const Vec& x);

/// b-hat^delta = b + int_{|y|<delta} y|y|^2/(1+|y|^2) nu - int_{|y|>=delta} y/(1+|y|^2) nu,
/// the drift of the SDE whose jumps are compensated on |y| < delta only.
/// The correction is a function of t through the rate.
std::shared_ptr<const DriftTerm> drift_conversion(const GeneratorSpec& spec, double delta);

/// Switches the truncation convention without changing the operator: the
/// drift gains (tempered to second order) or loses int y|y|^2/(1+|y|^2) nu.
/// Converting twice returns the original drift object.
GeneratorSpec convert_convention(const GeneratorSpec& spec);

/// Characteristic exponent of the Levy part for b = 0, a = identity:
/// -|theta|^2/2 + int (e^{i<theta,y>} - 1 - i<theta,y>/(1+|y|^2)) nu.
std::complex<double> levy_symbol(const LevyMeasureSpec& levy, double t, const Vec& theta);

}  // namespace flowjump
