#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "flowjump/corpus.hpp"
#include "flowjump/fp_diagnostics.hpp"
#include "flowjump/particles.hpp"

namespace fj = flowjump;
using std::numbers::pi;

namespace {

fj::GeneratorSpec heat_spec() {
  fj::FieldSpec fs{.dim = 2, .diffusion = "constant"};
  fs.params = {{"sigma", 1.0}};
  return {fj::make_field(fs), fj::LevyMeasureSpec::none(2), fj::TruncationConvention::Tempered};
}

fj::PideScheme unit_scheme(std::size_t steps) {
  fj::PideScheme s;
  s.time_grid = fj::uniform_grid(0.0, 1.0, steps);
  s.observation_times = s.time_grid;
  return s;
}

// N(0, I) pushed through Brownian motion for unit time is N(0, 2I).
const fj::PideSolution& heat_solution(std::size_t n) {
  static std::map<std::size_t, fj::PideSolution> cache;
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, fj::solve_pide_particle(heat_spec(), fj::InitialDensity::gaussian(fj::Vec::Zero(2), 1.0), n,
                                                  unit_scheme(10), 7))
             .first;
  return it->second;
}

double heat_kernel(const fj::Vec& x) { return std::exp(-x.squaredNorm() / 4.0) / (4.0 * pi); }

}  // namespace

TEST(InitialDensity, UniformBallCertificate) {
  // (1/pi)^2 * 2 pi * integral_0^1 r (1 + r^2)^2 dr = 7 / (3 pi).
  const auto ball = fj::InitialDensity::uniform_ball(2, 1.0, 2.0);
  EXPECT_NEAR(ball.certificate(), 7.0 / (3.0 * pi), 1e-12);
  EXPECT_NEAR(ball.density(fj::Vec::Zero(2)), 1.0 / pi, 1e-15);
  EXPECT_EQ(ball.density(fj::Vec::Constant(2, 1.0)), 0.0);
}

TEST(InitialDensity, GaussianCertificateAgainstRadialIntegral) {
  // d = 2, sd = 1, r = 3: integral phi^3 (1 + |x|^2)^4 by radial midpoint rule.
  const auto g = fj::InitialDensity::gaussian(fj::Vec::Zero(2), 1.0, 3.0);
  double ref = 0.0;
  const int m = 200000;
  const double top = 12.0;
  for (int i = 0; i < m; ++i) {
    const double r = (i + 0.5) * top / m;
    const double phi = std::exp(-r * r / 2.0) / (2 * pi);
    ref += 2 * pi * r * std::pow(phi, 3) * std::pow(1 + r * r, 4) * (top / m);
  }
  EXPECT_NEAR(g.certificate(), ref, 1e-8 * ref);
}

TEST(InitialDensity, SamplerMoments) {
  const auto g = fj::InitialDensity::gaussian(fj::Vec::Constant(2, 1.0), 0.5);
  fj::RandomStream rng(1, 0, fj::Channel::Initial);
  fj::RunningStats m, v;
  for (int i = 0; i < 40000; ++i) {
    const fj::Vec x = g.sample(rng);
    m.add(x[0]);
    v.add((x[1] - 1.0) * (x[1] - 1.0));
  }
  EXPECT_NEAR(m.mean(), 1.0, 4 * m.standard_error());
  EXPECT_NEAR(v.mean(), 0.25, 4 * v.standard_error());
  const auto ball = fj::InitialDensity::uniform_ball(2, 2.0);
  for (int i = 0; i < 1000; ++i) EXPECT_LE(ball.sample(rng).norm(), 2.0);
}

TEST(DensityEstimate, SingleParticleKernel) {
  const fj::DensityEstimate u({fj::Vec::Zero(2)}, 0.5, 0.0);
  EXPECT_NEAR(u(fj::Vec::Zero(2)), 1.0 / (2 * pi * 0.25), 1e-14);
  EXPECT_NEAR(u(fj::Vec::Unit(2, 0)), std::exp(-2.0) / (2 * pi * 0.25), 1e-14);
  EXPECT_NEAR(u.box_mass(fj::Vec::Constant(2, -20.0), fj::Vec::Constant(2, 20.0)), 1.0, 1e-15);
  EXPECT_NEAR(u.box_mass(fj::Vec::Zero(2), fj::Vec::Constant(2, 20.0)), 0.25, 1e-15);
  // Beyond the cutoff the kernel is dropped.
  EXPECT_EQ(u(fj::Vec::Unit(2, 0) * 0.5 * (fj::kKdeCutoff + 0.1)), 0.0);
}

TEST(DensityEstimate, DefaultBandwidthRule) {
  EXPECT_NEAR(fj::default_bandwidth(100000, 2), fj::kKdeBandwidthConstant * std::pow(1e5, -1.0 / 6.0), 1e-15);
  const fj::DensityGrid grid{2, 6.0, 64};
  EXPECT_EQ(grid.nodes().size(), 64u * 64u);
  EXPECT_NEAR(grid.cell_volume(), std::pow(12.0 / 64.0, 2), 1e-15);
}

TEST(PideParticle, GatesAreEnforced) {
  const auto spec = heat_spec();
  const auto init = fj::InitialDensity::gaussian(fj::Vec::Zero(2), 1.0);
  EXPECT_THROW(fj::solve_pide_particle(spec, init, 999, unit_scheme(4), 1), fj::InvalidInput);
  // q = 2 gives q* = 2; a declared r of 2 is not above it.
  EXPECT_THROW(fj::solve_pide_particle(spec, fj::InitialDensity::gaussian(fj::Vec::Zero(2), 1.0, 2.0), 1000,
                                       unit_scheme(4), 1),
               fj::GateViolation);
  auto scheme = unit_scheme(4);
  scheme.observation_times = {0.3};
  EXPECT_THROW(fj::solve_pide_particle(spec, init, 1000, scheme, 1), fj::InvalidInput);
  auto jumpy = spec;
  jumpy.field = fj::make_field({.dim = 2, .diffusion = "constant", .jump = "additive", .params = {{"sigma", 1.0}}});
  jumpy.levy = fj::LevyMeasureSpec::compound(fj::RatePath::constant(1.0), fj::MarkLaw::fixed(fj::Vec::Unit(2, 0)));
  EXPECT_THROW(fj::solve_pide_particle(jumpy, init, 1000, unit_scheme(4), 1), fj::GateViolation);
}

TEST(PideParticle, HeatKernelMomentsAndDensity) {
  const auto& sol = heat_solution(20000);
  const std::size_t last = sol.times().size() - 1;
  const auto sq = sol.average(last, [](const fj::Vec& x) { return x.squaredNorm(); });
  EXPECT_NEAR(sq.mean, 4.0, 4 * sq.standard_error);
  const auto u = sol.density(last);
  // The kernel estimate has mean N(0, (2 + h^2) I) at the origin.
  const double h = u.bandwidth();
  EXPECT_NEAR(u(fj::Vec::Zero(2)), 1.0 / (2 * pi * (2 + h * h)), 2.5e-3);
  EXPECT_NEAR(u.box_mass(fj::Vec::Constant(2, -20.0), fj::Vec::Constant(2, 20.0)), 1.0, 1e-9);
  EXPECT_EQ(sol.divergent(), 0u);
}

TEST(PideParticle, ReproducibleAcrossRuns) {
  const auto a = fj::solve_pide_particle(heat_spec(), fj::InitialDensity::gaussian(fj::Vec::Zero(2), 1.0), 1000,
                                         unit_scheme(4), 3);
  const auto b = fj::solve_pide_particle(heat_spec(), fj::InitialDensity::gaussian(fj::Vec::Zero(2), 1.0), 1000,
                                         unit_scheme(4), 3);
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(a.position(4, i), b.position(4, i));
}

// The bandwidth constant is calibrated on the heat kernel at N = 1e5: the
// L1 error at t = 1 over c in {1.0, 1.5, 2.0} is smallest at the frozen value.
TEST(PideParticle, BandwidthConstantCalibration) {
  const auto& sol = heat_solution(100000);
  const std::size_t last = sol.times().size() - 1;
  const fj::DensityGrid grid{2, 6.0, 64};
  const double scale = std::pow(1e5, -1.0 / 6.0);
  std::map<double, double> l1;
  for (double c : {1.0, fj::kKdeBandwidthConstant, 2.0})
    l1[c] = fj::l1_distance(fj::evaluate_on_grid(sol.density(last, c * scale), grid), grid, heat_kernel);
  EXPECT_LT(l1[fj::kKdeBandwidthConstant], l1[1.0]);
  EXPECT_LT(l1[fj::kKdeBandwidthConstant], l1[2.0]);
  EXPECT_LT(l1[fj::kKdeBandwidthConstant], 0.035);
}

TEST(FpDiagnostics, WeightedNormOfGaussian) {
  // u = N(0, I), q* = 2: (1/2pi) int_0^inf r e^{-r^2} (1 + r^2)^2 dr = 2.5 / (2 pi).
  const fj::DensityGrid grid{2, 8.0, 256};
  std::vector<double> values;
  for (const auto& x : grid.nodes()) values.push_back(std::exp(-x.squaredNorm() / 2) / (2 * pi));
  EXPECT_NEAR(fj::weighted_norm(values, grid, 2.0), 2.5 / (2 * pi), 1e-6);
}

TEST(FpDiagnostics, HeatKernelWeakResidualAndRepresentation) {
  const auto& sol = heat_solution(20000);
  const auto rows = fj::weak_residual(sol, heat_spec(),
                                      {fj::TestFunction::smoothed_square(2, 10.0),
                                       fj::TestFunction::gaussian(fj::Vec::Zero(2), 1.0)});
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) EXPECT_LT(std::abs(r.residual), 4 * r.standard_error + 1e-3) << r.name << " " << r.t;
  const auto rep = fj::representation_check(sol, {fj::TestFunction::gaussian(fj::Vec::Zero(2), 1.0)},
                                            fj::DensityGrid{2, 8.0, 64});
  // <u_t, phi> equals the particle average of phi convolved with the kernel,
  // which for phi = exp(-|x|^2/2) is exp(-|x|^2 / (2 (1 + h^2))) / (1 + h^2).
  ASSERT_EQ(rep.size(), sol.times().size());
  for (std::size_t k = 0; k < rep.size(); ++k) {
    const double h2 = std::pow(sol.density(k).bandwidth(), 2);
    const auto smoothed =
        sol.average(k, [&](const fj::Vec& x) { return std::exp(-x.squaredNorm() / (2 * (1 + h2))) / (1 + h2); });
    EXPECT_NEAR(rep[k].density_integral, smoothed.mean, 1e-6);
  }
}

TEST(FpDiagnostics, ClassMembershipWithNegativeControl) {
  const auto& sol = heat_solution(20000);
  const fj::DensityGrid grid{2, 6.0, 48};
  const auto good = fj::class_membership(sol, 2.0, grid);
  EXPECT_TRUE(good.finite);
  EXPECT_TRUE(good.stable) << good.relative_change;
  // A bandwidth far below the grid step turns the estimate into spikes whose
  // weighted norm depends on which particles land near nodes.
  const auto bad = fj::class_membership(sol, 2.0, grid, 1e-3);
  EXPECT_FALSE(bad.stable) << bad.relative_change;
}

TEST(FpDiagnostics, SemigroupOfDeterministicLinearFlow) {
  fj::FieldSpec fs{.dim = 2, .drift = "linear"};
  fs.params = {{"a", -0.5}};
  const fj::GeneratorSpec spec{fj::make_field(fs), fj::LevyMeasureSpec::none(2), fj::TruncationConvention::Tempered};
  const auto phi = fj::TestFunction::gaussian(fj::Vec::Zero(2), 1.0);
  fj::SemigroupOptions opts;
  opts.direct_paths = 10;
  opts.outer_paths = 4;
  opts.inner_paths = 4;
  const std::vector<fj::Vec> xs{fj::Vec::Constant(2, 0.5), fj::Vec::Unit(2, 1)};
  const auto rep = fj::semigroup_check(spec, 0.0, 0.5, 1.0, *phi, xs, 1, opts);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& row : rep.rows) {
    // Euler with h = 0.01 over unit time contracts by (1 - 0.005)^100.
    const double factor = std::pow(1.0 - 0.005, 100);
    EXPECT_NEAR(row.direct.mean, phi->value(factor * row.x), 1e-12);
    EXPECT_NEAR(row.nested.mean, row.direct.mean, 1e-12);
  }
  EXPECT_LT(rep.max_deviation, 1e-12);
}

TEST(FpDiagnostics, SemigroupOfBrownianMotion) {
  const auto phi = fj::TestFunction::gaussian(fj::Vec::Zero(2), 1.0);
  fj::SemigroupOptions opts;
  opts.direct_paths = 20000;
  opts.outer_paths = 400;
  opts.inner_paths = 50;
  opts.steps_per_unit = 10;
  const auto rep = fj::semigroup_check(heat_spec(), 0.0, 0.5, 1.0, *phi, {fj::Vec::Zero(2)}, 5, opts);
  // E exp(-|x + W_1|^2 / 2) = exp(-|x|^2 / 4) / 2 in d = 2.
  EXPECT_NEAR(rep.rows[0].direct.mean, 0.5, 4 * rep.rows[0].direct.standard_error);
  EXPECT_LT(rep.max_z, 4.0);
}

TEST(FpDiagnostics, CouplingOfIdenticalSchemesIsZero) {
  fj::FieldSpec fs{.dim = 2, .drift = "smooth", .diffusion = "constant"};
  fs.params = {{"sigma", 0.5}};
  const fj::GeneratorSpec spec{fj::make_field(fs), fj::LevyMeasureSpec::none(2), fj::TruncationConvention::Tempered};
  const auto init = fj::InitialDensity::gaussian(fj::Vec::Zero(2), 1.0);
  fj::CouplingOptions opts;
  opts.particles = 200;
  opts.fine_steps = 50;
  opts.coarsen_factor = 1;
  const auto same = fj::pathwise_uniqueness_diagnostic(spec, init, {0.1, 0.01}, 3, opts);
  for (const auto& row : same.rows) EXPECT_EQ(row.functional.mean, 0.0);
  EXPECT_EQ(same.ratio, 1.0);
  EXPECT_TRUE(same.bounded);
  opts.coarsen_factor = 2;
  const auto diff = fj::pathwise_uniqueness_diagnostic(spec, init, {0.1, 0.01, 0.001}, 3, opts);
  EXPECT_GT(diff.budget, fj::kUniquenessC);
  EXPECT_LT(diff.rows[0].functional.mean, diff.rows[1].functional.mean);
  EXPECT_LT(diff.rows[1].functional.mean, diff.rows[2].functional.mean);
  std::ostringstream out;
  fj::write_coupling_csv(out, diff);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "delta,functional,se,budget");
}

TEST(FpDiagnostics, DensityCsvHasReferenceColumn) {
  const fj::DensityGrid grid{2, 1.0, 2};
  std::ostringstream out;
  fj::write_density_csv(out, grid, {1, 2, 3, 4}, heat_kernel);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x1,x2,u,reference");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}
