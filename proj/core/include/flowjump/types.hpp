#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace flowjump {

/// Largest state dimension supported by the simulation hot path. State
/// vectors and Jacobians live on the stack with this capacity.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Spatial derivative of a diffusion matrix: `by_axis[j](i, k)` holds
/// the partial derivative of sigma^{ik} with respect to x_j.
struct DiffusionGradient {
  int dim = 0;
  std::array<Mat, kMaxDim> by_axis;

  explicit DiffusionGradient(int d = 0) : dim(d) {
    for (int j = 0; j < d; ++j) by_axis[j] = Mat::Zero(d, d);
  }

  /// Matrix G^k with G^k(i, j) = d_j sigma^{ik}; the k-th column field's
  /// Jacobian. This is what multiplies J in the variational equation.
  Mat column_jacobian(int k) const {
    Mat g(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g(i, j) = by_axis[j](i, k);
    return g;
  }
};

/// Rejected input: dimension mismatch, out-of-range parameter, malformed data.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A declared regularity or moment gate does not hold.
class GateViolation : public std::domain_error {
 public:
  GateViolation(const std::string& what, double value, double threshold)
      : std::domain_error(what), value_(value), threshold_(threshold) {}
  double value() const noexcept { return value_; }
  double threshold() const noexcept { return threshold_; }

 private:
  double value_;
  double threshold_;
};

/// Derivative requested at a declared singular point of a field.
class SingularPoint : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Internal consistency failure, e.g. a determinant jump factor at or below -1.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowjump
