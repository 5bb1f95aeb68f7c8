#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "flowjump/corpus.hpp"
#include "flowjump/determinant.hpp"
#include "flowjump/ensemble.hpp"
#include "flowjump/flow.hpp"

namespace fj = flowjump;
using std::numbers::pi;

namespace {

fj::SdeModel linear_model(double a) {
  fj::FieldSpec spec{.dim = 2, .drift = "linear"};
  spec.params = {{"a", a}};
  return {fj::make_field(spec), fj::LevyMeasureSpec::none(2)};
}

}  // namespace

TEST(Flow, LinearDriftEulerIsGeometric) {
  const double a = -0.8;
  const auto model = linear_model(a);
  const std::size_t n = 50;
  const auto grid = fj::uniform_grid(0.0, 1.0, n);
  const auto noise = fj::sample_noise(grid, model.levy, 1, 0);
  fj::Vec x0(2);
  x0 << 1.0, -2.0;
  const auto traj = fj::determinant_decomposition(model, noise, x0);
  const double factor = std::pow(1.0 + a / n, static_cast<double>(n));
  EXPECT_LT((traj.states.back() - factor * x0).norm(), 1e-13);
  EXPECT_LT((traj.jacobians.back() - factor * fj::Mat::Identity(2, 2)).norm(), 1e-13);
  EXPECT_NEAR(traj.decomposition.det_direct.back(), factor * factor, 1e-13);
  // Continuous-time decomposition value exp(tr A t) against the Euler product.
  EXPECT_NEAR(traj.decomposition.det_explicit.back(), std::exp(2 * a), 0.05);
}

TEST(Flow, AdditiveJumpsUnderBothCompensators) {
  fj::Vec y(2);
  y << 0.3, -0.1;
  const double rate = 4.0;
  const fj::SdeModel model{fj::make_field({.dim = 2, .jump = "additive"}),
                           fj::LevyMeasureSpec::compound(fj::RatePath::constant(rate), fj::MarkLaw::fixed(y))};
  const auto grid = fj::uniform_grid(0.0, 1.0, 16);
  const auto noise = fj::sample_noise(grid, model.levy, 17, 3);
  ASSERT_GT(noise.jumps.size(), 0u);
  const double count = static_cast<double>(noise.jumps.size());
  const fj::Vec x0 = fj::Vec::Zero(2);
  fj::SchemeOptions raw;
  raw.compensator = fj::CompensatorMode::None;
  const auto t_raw = fj::simulate_flow(model, noise, x0, raw);
  EXPECT_LT((t_raw.states.back() - count * y).norm(), 1e-13);
  const auto t_full = fj::simulate_flow(model, noise, x0);
  EXPECT_LT((t_full.states.back() - (count - rate) * y).norm(), 1e-12);
  for (const auto& j : t_raw.jumps) EXPECT_LT((j.right - j.left - y).norm(), 1e-15);
}

TEST(Flow, SmallJumpCompensationSkipsLargeMarks) {
  fj::Vec y(2);
  y << 2.0, 0.0;
  const fj::SdeModel model{fj::make_field({.dim = 2, .jump = "additive"}),
                           fj::LevyMeasureSpec::compound(fj::RatePath::constant(1.0), fj::MarkLaw::fixed(y))};
  const auto noise = fj::sample_noise(fj::uniform_grid(0.0, 1.0, 8), model.levy, 2, 2);
  fj::SchemeOptions small;
  small.compensator = fj::CompensatorMode::SmallJumps;
  small.small_jump_radius = 1.0;
  fj::SchemeOptions raw;
  raw.compensator = fj::CompensatorMode::None;
  EXPECT_EQ(fj::simulate_flow(model, noise, fj::Vec::Zero(2), small).states.back(),
            fj::simulate_flow(model, noise, fj::Vec::Zero(2), raw).states.back());
}

TEST(Flow, DeterminantJumpsStayInsideGate) {
  fj::FieldSpec spec{.dim = 2, .jump = "smooth"};
  spec.params = {{"jump_amplitude", 0.1}};
  spec.alpha = 0.1;
  const fj::SdeModel model{fj::make_field(spec), fj::LevyMeasureSpec::compound(
                                                     fj::RatePath::constant(50.0), fj::MarkLaw::fixed(fj::Vec::Unit(2, 0) * 5.0))};
  const auto noise = fj::sample_noise(fj::uniform_grid(0.0, 1.0, 4), model.levy, 1, 1);
  ASSERT_GT(noise.jumps.size(), 10u);
  fj::SchemeOptions opts;
  opts.decomposition = true;
  const auto traj = fj::simulate_flow(model, noise, fj::Vec::Constant(2, 0.3), opts);
  EXPECT_GT(traj.max_abs_dM, 0.0);
  EXPECT_LE(traj.max_abs_dM, 1.0 / fj::beta_alpha(2, 0.1));
  EXPECT_EQ(traj.dM_bound_violations, 0u);
}

TEST(Flow, NonInvertibleJumpMapIsReported) {
  fj::FieldSpec spec{.dim = 2, .jump = "smooth"};
  spec.params = {{"jump_amplitude", 0.9}};
  spec.alpha = 0.9;
  const fj::SdeModel model{fj::make_field(spec), fj::LevyMeasureSpec::compound(
                                                     fj::RatePath::constant(50.0), fj::MarkLaw::fixed(fj::Vec::Unit(2, 0) * 5.0))};
  const auto noise = fj::sample_noise(fj::uniform_grid(0.0, 1.0, 4), model.levy, 1, 1);
  fj::SchemeOptions opts;
  opts.decomposition = true;
  opts.enforce_jump_gate = false;
  EXPECT_THROW(fj::simulate_flow(model, noise, fj::Vec::Constant(2, 0.3), opts), fj::ConsistencyError);
}

TEST(Flow, ExplicitDeterminantTracksDirectOnSmoothField) {
  fj::FieldSpec spec{.dim = 2, .drift = "smooth", .diffusion = "smooth", .jump = "smooth"};
  spec.params = {{"jump_amplitude", 0.1}, {"s0", 0.5}, {"eps", 0.1}};
  const fj::SdeModel model{fj::make_field(spec),
                           fj::LevyMeasureSpec::compound(fj::RatePath::constant(2.0),
                                                         fj::MarkLaw::symmetric(fj::Vec::Unit(2, 0) * 0.5))};
  const auto noise = fj::sample_noise(fj::uniform_grid(0.0, 1.0, 2000), model.levy, 4, 0);
  const auto traj = fj::determinant_decomposition(model, noise, fj::Vec::Constant(2, 0.2));
  const auto& dd = traj.decomposition;
  double worst = 0.0;
  for (std::size_t k = 0; k < dd.det_direct.size(); ++k)
    worst = std::max(worst, std::abs(dd.det_explicit[k] - dd.det_direct[k]) / std::abs(dd.det_direct[k]));
  EXPECT_LT(worst, 0.02);
  EXPECT_EQ(traj.dM_bound_violations, 0u);
}

TEST(Flow, TrajectoryCsvHasHeaderAndRows) {
  const auto model = linear_model(0.5);
  const auto noise = fj::sample_noise(fj::uniform_grid(0.0, 1.0, 4), model.levy, 1, 0);
  std::ostringstream out;
  fj::write_trajectory_csv(out, fj::determinant_decomposition(model, noise, fj::Vec::Ones(2)));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x1,x2,det_direct,det_explicit,A1,A2,Mc,Md");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Ratios, BackwardAndAffineForward) {
  fj::Vec x(2), X(2);
  x << 1.0, 0.0;
  X << 0.0, 2.0;
  // ((1 + 1) / (1 + 4))^2 * 0.5
  EXPECT_NEAR(fj::backward_ratio(x, X, 0.5), 0.08, 1e-15);
  // X(z) = 2z: preimage of x is x/2, so the ratio is ((1 + 1) / (1 + 1/4))^2 / 4.
  EXPECT_NEAR(fj::forward_ratio_affine(2.0 * fj::Mat::Identity(2, 2), fj::Vec::Zero(2), x), 0.64, 1e-14);
}

TEST(Liouville, LinearDriftMatchesMatrixExponential) {
  fj::Mat A(2, 2);
  A << -0.5, 1.0, -1.0, 0.2;
  const fj::LinearDrift drift(A);
  fj::Vec x0(2);
  x0 << 0.7, -0.3;
  const auto oracle = fj::liouville_oracle(drift, x0, 0.0, 1.0);
  const Eigen::Matrix2d E = Eigen::Matrix2d(A).exp();
  EXPECT_LT((oracle.x - E * Eigen::Vector2d(x0)).norm(), 1e-9);
  EXPECT_NEAR(oracle.det, std::exp(A.trace()), 1e-9);
}

TEST(Ensemble, MuGridMassAndBoxGrid) {
  EXPECT_NEAR(fj::mu_grid(2, 64).mass(), pi, 1e-3 * pi);
  // d = 1: the mapped cube carries exactly 2 atan(64) of the mass.
  EXPECT_NEAR(fj::mu_grid(1, 256).mass(), 2 * std::atan(64.0), 1e-4);
  const auto box = fj::box_grid(2, 100, 1.0);
  // Integral of (1+|x|^2)^{-2} over [-1,1]^2 by a fine midpoint oracle.
  double ref = 0.0;
  const int m = 2000;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double u = -1 + (i + 0.5) * 2.0 / m, v = -1 + (j + 0.5) * 2.0 / m;
      ref += 1.0 / std::pow(1 + u * u + v * v, 2) * (4.0 / m / m);
    }
  EXPECT_NEAR(box.mass(), ref, 1e-4);
  EXPECT_NEAR(fj::mu_integral([](const fj::Vec&) { return 1.0; }, 2), pi, 1e-3);
}

TEST(Ensemble, ParallelForCoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  fj::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Ensemble, ChangeOfVariablesForDeterministicRotation) {
  fj::FieldSpec spec{.dim = 2, .drift = "swirl"};
  spec.params = {{"k", 1.0}};
  const fj::SdeModel model{fj::make_field(spec), fj::LevyMeasureSpec::none(2)};
  const auto grid = fj::mu_grid(2, 64);
  const std::vector<fj::NamedFunction> tests{
      {"gaussian", [](const fj::Vec& x) { return std::exp(-x.squaredNorm()); }}};
  const auto res = fj::change_of_variables_check(model, grid, fj::uniform_grid(0.0, 1.0, 25), 1, 2, tests);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_LT(res[0].relative_error, 0.02);
  EXPECT_EQ(res[0].excluded_paths, 0u);
}

TEST(Ensemble, MomentDiagnosticsRejectsPAboveBetaWithJumps) {
  fj::FieldSpec spec{.dim = 2, .jump = "additive"};
  spec.alpha = 0.1;
  const fj::SdeModel model{fj::make_field(spec),
                           fj::LevyMeasureSpec::compound(fj::RatePath::constant(1.0), fj::MarkLaw::fixed(fj::Vec::Unit(2, 0)))};
  const double beta = fj::beta_alpha(2, 0.1);
  EXPECT_THROW(fj::moment_diagnostics(model, fj::mu_grid(2, 8), fj::uniform_grid(0.0, 1.0, 4), 1, 4, beta + 0.5),
               fj::GateViolation);
  EXPECT_NO_THROW(fj::moment_diagnostics(model, fj::mu_grid(2, 8), fj::uniform_grid(0.0, 1.0, 4), 1, 4, 1.5));
}
