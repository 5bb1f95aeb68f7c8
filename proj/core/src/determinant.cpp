#include "flowjump/determinant.hpp"

#include <cmath>
#include <string>

namespace flowjump {

SquareMatrix::SquareMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols())
    throw InvalidInput("SquareMatrix: matrix is not square");
  if (values_.rows() < 2 || values_.rows() > kMaxDeterminantDim)
    throw InvalidInput("SquareMatrix: dimension must lie in [2, 16], got " +
                       std::to_string(values_.rows()));
  if (!values_.allFinite()) throw InvalidInput("SquareMatrix: non-finite entry");
}

SquareMatrix SquareMatrix::identity(int dim) {
  return SquareMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

SquareMatrix SquareMatrix::zero(int dim) { return SquareMatrix(Eigen::MatrixXd::Zero(dim, dim)); }

namespace {

void require_same_dim(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.dim() != b.dim())
    throw InvalidInput("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                       std::to_string(b.dim()));
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInput("alpha must lie in (0, 1), got " + std::to_string(alpha));
}

}  // namespace

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

double det_first_derivative(const SquareMatrix& a, const SquareMatrix& b) {
  require_same_dim(a, b);
  return determinant(a.values()) * b.values().trace();
}

double det_second_derivative(const SquareMatrix& a, const SquareMatrix& b) {
  require_same_dim(a, b);
  const auto& m = b.values();
  const double tr = m.trace();
  // sum_{i,j} b_ii b_jj - b_ij b_ji = tr(B)^2 - tr(B^2)
  const double tr_sq = (m * m).trace();
  return determinant(a.values()) * (tr * tr - tr_sq);
}

double det_remainder(const SquareMatrix& b, double alpha) {
  const auto& m = b.values();
  const double worst = m.cwiseAbs().maxCoeff();
  if (worst > alpha)
    throw InvalidInput("det_remainder: entry " + std::to_string(worst) + " exceeds alpha " +
                       std::to_string(alpha));
  const Eigen::MatrixXd shifted = Eigen::MatrixXd::Identity(b.dim(), b.dim()) + m;
  return std::abs(determinant(shifted) - 1.0 - m.trace());
}

double remainder_bound(int dim, double alpha) {
  return factorial(dim) * dim * dim * alpha * alpha * std::pow(1.0 + alpha, dim - 2);
}

bool remainder_bound_check(const SquareMatrix& b, double alpha) {
  return det_remainder(b, alpha) <= remainder_bound(b.dim(), alpha);
}

double beta_alpha(int dim, double alpha) {
  if (dim < 2) throw InvalidInput("beta_alpha: dimension must be >= 2");
  require_alpha(alpha);
  return 1.0 / (dim * alpha + remainder_bound(dim, alpha));
}

JumpSizeGate JumpSizeGate::make(int dim, double alpha) {
  return JumpSizeGate{dim, alpha, beta_alpha(dim, alpha)};
}

GateReport evaluate_gates(int dim, double alpha, double q) {
  if (!(q > 1.0)) throw InvalidInput("evaluate_gates: Sobolev exponent must exceed 1");
  GateReport r;
  r.dim = dim;
  r.alpha = alpha;
  r.q = q;
  r.beta = beta_alpha(dim, alpha);
  r.rule_of_thumb_alpha = 1.0 / (8.0 * dim);
  r.rough_gate_beta = 1.0 / (q - 1.0);

  // beta_alpha is strictly decreasing, so {alpha : beta_alpha > c} = (0, a*).
  // Solve d a + remainder_bound(d, a) = 1/c by bisection on (0, 1).
  const double target = q - 1.0;
  const auto excess = [&](double a) { return dim * a + remainder_bound(dim, a) - target; };
  if (excess(1.0 - 1e-15) <= 0.0) {
    r.rough_gate_alpha = 1.0;
  } else {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    r.rough_gate_alpha = lo;
  }
  r.rule_of_thumb_ok = alpha < r.rule_of_thumb_alpha;
  r.rough_gate_ok = r.beta > r.rough_gate_beta;
  r.binding = r.rough_gate_alpha < r.rule_of_thumb_alpha ? GateReport::Binding::RoughGate
                                                         : GateReport::Binding::RuleOfThumb;
  return r;
}

}  // namespace flowjump
