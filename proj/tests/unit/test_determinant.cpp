#include <gtest/gtest.h>

#include <boost/rational.hpp>

#include "flowjump/determinant.hpp"
#include "flowjump/rng.hpp"

namespace fj = flowjump;

namespace {

Eigen::MatrixXd random_matrix(fj::RandomStream& rng, int d, double scale) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace

TEST(Determinant, EliminationMatchesEigen) {
  fj::RandomStream rng(3, 0, fj::Channel::Auxiliary);
  for (int d = 1; d <= 8; ++d) {
    const Eigen::MatrixXd m = random_matrix(rng, d, 1.0);
    EXPECT_NEAR(fj::determinant(m), m.determinant(), 1e-12 * std::max(1.0, std::abs(m.determinant())));
  }
  EXPECT_EQ(fj::determinant(Eigen::MatrixXd::Zero(3, 3)), 0.0);
}

TEST(Determinant, FirstDerivativeMatchesFiniteDifference) {
  fj::RandomStream rng(4, 0, fj::Channel::Auxiliary);
  for (int d = 2; d <= 4; ++d) {
    for (int k = 0; k < 50; ++k) {
      const Eigen::MatrixXd A = random_matrix(rng, d, 1.0);
      const Eigen::MatrixXd B = random_matrix(rng, d, 0.5);
      const double h = 1e-3;
      auto f = [&](double t) { return (A + t * B * A).determinant(); };
      const double fd = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
      const double an = fj::det_first_derivative(fj::SquareMatrix(A), fj::SquareMatrix(B));
      EXPECT_NEAR(an, fd, 1e-6 * std::max(1.0, std::abs(an)));
      EXPECT_NEAR(an, A.determinant() * B.trace(), 1e-12 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST(Determinant, SecondDerivativeMatchesMixedFiniteDifference) {
  fj::RandomStream rng(5, 0, fj::Channel::Auxiliary);
  for (int d = 2; d <= 4; ++d) {
    for (int k = 0; k < 50; ++k) {
      const Eigen::MatrixXd A = random_matrix(rng, d, 1.0);
      const Eigen::MatrixXd B = random_matrix(rng, d, 0.5);
      const double h = 1e-3;
      auto g = [&](double t, double s) { return (A + t * B * A + s * B * A).determinant(); };
      const double fd = (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4 * h * h);
      const double an = fj::det_second_derivative(fj::SquareMatrix(A), fj::SquareMatrix(B));
      EXPECT_NEAR(an, fd, 1e-4 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST(Determinant, IdentityExamples) {
  const auto I = fj::SquareMatrix::identity(3);
  EXPECT_DOUBLE_EQ(fj::det_first_derivative(I, I), 3.0);
  // (tr I)^2 - tr(I^2) = 9 - 3
  EXPECT_DOUBLE_EQ(fj::det_second_derivative(I, I), 6.0);
  EXPECT_EQ(fj::det_remainder(fj::SquareMatrix::zero(2), 0.1), 0.0);
}

TEST(Determinant, RemainderBoundHoldsOnBoundedMatrices) {
  fj::RandomStream rng(6, 0, fj::Channel::Auxiliary);
  for (int d = 2; d <= 4; ++d) {
    for (double alpha : {0.01, 0.1, 0.3, 0.9}) {
      for (int k = 0; k < 1000; ++k) {
        Eigen::MatrixXd B(d, d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) B(i, j) = alpha * (2.0 * rng.uniform() - 1.0);
        ASSERT_TRUE(fj::remainder_bound_check(fj::SquareMatrix(B), alpha));
      }
    }
  }
}

TEST(Determinant, RemainderRejectsEntriesAboveAlpha) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2, 2);
  B(0, 1) = 0.2;
  EXPECT_THROW(fj::det_remainder(fj::SquareMatrix(B), 0.1), fj::InvalidInput);
}

TEST(Determinant, RemainderBoundClosedForm) {
  // d! d^2 alpha^2 (1 + alpha)^(d-2)
  EXPECT_DOUBLE_EQ(fj::remainder_bound(2, 0.5), 2.0 * 4.0 * 0.25);
  EXPECT_DOUBLE_EQ(fj::remainder_bound(3, 0.5), 6.0 * 9.0 * 0.25 * 1.5);
}

TEST(BetaAlpha, RationalOracle) {
  using Q = boost::rational<long long>;
  for (int d = 2; d <= 4; ++d) {
    for (long long den : {4LL, 8LL, 16LL, 10LL}) {
      const Q alpha(1, den);
      Q power(1);
      for (int k = 0; k < d - 2; ++k) power *= Q(1) + alpha;
      long long fact = 1;
      for (int k = 2; k <= d; ++k) fact *= k;
      const Q beta = Q(1) / (Q(d) * alpha + Q(fact * d * d) * alpha * alpha * power);
      EXPECT_NEAR(fj::beta_alpha(d, 1.0 / static_cast<double>(den)), boost::rational_cast<double>(beta), 1e-14);
    }
  }
  EXPECT_EQ(fj::beta_alpha(2, 0.25), 1.0);
}

TEST(BetaAlpha, StrictlyDecreasingInAlpha) {
  for (int d = 2; d <= 4; ++d) {
    double prev = INFINITY;
    for (int k = 1; k <= 50; ++k) {
      const double b = fj::beta_alpha(d, k / 51.0);
      EXPECT_LT(b, prev);
      prev = b;
    }
  }
}

TEST(BetaAlpha, RejectsOutOfRange) {
  EXPECT_THROW(fj::beta_alpha(1, 0.1), fj::InvalidInput);
  EXPECT_THROW(fj::beta_alpha(2, 0.0), fj::InvalidInput);
  EXPECT_THROW(fj::beta_alpha(2, 1.0), fj::InvalidInput);
}

TEST(Gates, JumpSizeGateAndBindingThreshold) {
  const auto gate = fj::JumpSizeGate::make(2, 0.25);
  EXPECT_DOUBLE_EQ(gate.max_jump(), 1.0);
  // beta must exceed 1/(q-1) = 2 for q = 1.5; alpha = 0.25 gives beta = 1.
  const auto rep = fj::evaluate_gates(2, 0.25, 1.5);
  EXPECT_FALSE(rep.rough_gate_ok);
  EXPECT_GT(fj::beta_alpha(2, rep.rough_gate_alpha * 0.999), 2.0);
}

TEST(Factorial, SmallValues) {
  EXPECT_EQ(fj::factorial(0), 1.0);
  EXPECT_EQ(fj::factorial(5), 120.0);
}
