#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "flowjump/types.hpp"

namespace flowjump {

/// Largest dimension accepted by the determinant routines.
inline constexpr int kMaxDeterminantDim = 16;

/// A d x d real matrix with d in [2, 16] and finite entries.
class SquareMatrix {
 public:
  explicit SquareMatrix(Eigen::MatrixXd values);

  static SquareMatrix identity(int dim);
  static SquareMatrix zero(int dim);

  int dim() const noexcept { return static_cast<int>(values_.rows()); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double operator()(int i, int j) const { return values_(i, j); }

 private:
  Eigen::MatrixXd values_;
};

/// Determinant by Gaussian elimination with partial pivoting.
template <class Derived>
double determinant(const Eigen::MatrixBase<Derived>& m) {
  using Work = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDeterminantDim,
                             kMaxDeterminantDim>;
  const Eigen::Index n = m.rows();
  if (n != m.cols() || n > kMaxDeterminantDim) throw InvalidInput("determinant: bad shape");
  if (n == 0) return 1.0;
  Work a = m;
  double det = 1.0;
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    double best = std::abs(a(col, col));
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > best) {
        best = std::abs(a(r, col));
        pivot = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      det = -det;
    }
    const double p = a(col, col);
    det *= p;
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / p;
      if (factor == 0.0) continue;
      for (Eigen::Index c = col + 1; c < n; ++c) a(r, c) -= factor * a(col, c);
    }
  }
  return det;
}

/// d/dt det(A + tBA) at t = 0, i.e. det(A) tr(B).
double det_first_derivative(const SquareMatrix& a, const SquareMatrix& b);

/// Mixed partial d^2/dt ds det(A + tBA + sBA) at 0, i.e.
/// det(A) * sum_{i,j} (b_ii b_jj - b_ij b_ji).
double det_second_derivative(const SquareMatrix& a, const SquareMatrix& b);

/// |det(I + B) - 1 - tr(B)|. Throws InvalidInput if some |b_ij| > alpha.
double det_remainder(const SquareMatrix& b, double alpha);

/// d! d^2 alpha^2 (1 + alpha)^(d - 2): the bound on det_remainder for
/// matrices with all entries bounded by alpha.
double remainder_bound(int dim, double alpha);

/// True iff det_remainder(b, alpha) <= remainder_bound(b.dim(), alpha).
bool remainder_bound_check(const SquareMatrix& b, double alpha);

/// beta_alpha = (d alpha + d! d^2 alpha^2 (1 + alpha)^(d - 2))^(-1).
/// Requires d >= 2 and alpha in (0, 1).
double beta_alpha(int dim, double alpha);

/// d! as a double; exact for d <= 18.
double factorial(int n);

/// Jump-size control: alpha bounds every entry of the jump Jacobian, and
/// beta_alpha^(-1) bounds every determinant jump |Delta M|.
struct JumpSizeGate {
  int dim = 2;
  double alpha = 0.0;
  double beta = 0.0;

  static JumpSizeGate make(int dim, double alpha);
  double max_jump() const noexcept { return 1.0 / beta; }
};

/// Which of the two small-jump thresholds is the stricter one for a given
/// Sobolev exponent q. The rule-of-thumb threshold is alpha < 1/(8d); the
/// rough-drift existence gate is beta_alpha > 1/(q - 1).
struct GateReport {
  int dim = 2;
  double alpha = 0.0;
  double q = 0.0;
  double beta = 0.0;
  double rule_of_thumb_alpha = 0.0;  // 1/(8d)
  double rough_gate_beta = 0.0;      // 1/(q-1)
  double rough_gate_alpha = 0.0;     // largest alpha with beta_alpha > 1/(q-1)
  bool rule_of_thumb_ok = false;
  bool rough_gate_ok = false;
  enum class Binding { RuleOfThumb, RoughGate } binding = Binding::RuleOfThumb;
};

GateReport evaluate_gates(int dim, double alpha, double q);

}  // namespace flowjump
