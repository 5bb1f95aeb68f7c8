#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "flowjump/noise.hpp"
#include "flowjump/rng.hpp"
#include "flowjump/stats.hpp"

namespace fj = flowjump;

TEST(Philox, KnownAnswerVectors) {
  using C = fj::Philox4x32::Counter;
  using K = fj::Philox4x32::Key;
  EXPECT_EQ(fj::Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}),
            (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(fj::Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(fj::Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStream, AddressedAndReproducible) {
  fj::RandomStream a(11, 3, fj::Channel::Brownian);
  fj::RandomStream b(11, 3, fj::Channel::Brownian);
  fj::RandomStream c(11, 3, fj::Channel::JumpTimes);
  fj::RandomStream d(11, 4, fj::Channel::Brownian);
  int same_c = 0, same_d = 0;
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    same_c += u == c.uniform();
    same_d += u == d.uniform();
  }
  EXPECT_EQ(same_c, 0);
  EXPECT_EQ(same_d, 0);
  EXPECT_NE(fj::derive_stream(1, 2), fj::derive_stream(2, 1));
}

TEST(RandomStream, MomentsOfDistributions) {
  fj::RandomStream rng(1, 0, fj::Channel::Auxiliary);
  fj::RunningStats u, z, z2, e;
  for (int i = 0; i < 200000; ++i) {
    const double x = rng.uniform();
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
    u.add(x);
    const double g = rng.normal();
    z.add(g);
    z2.add(g * g);
    e.add(rng.exponential());
  }
  EXPECT_NEAR(u.mean(), 0.5, 4 * u.standard_error());
  EXPECT_NEAR(z.mean(), 0.0, 4 * z.standard_error());
  EXPECT_NEAR(z2.mean(), 1.0, 4 * z2.standard_error());
  EXPECT_NEAR(e.mean(), 1.0, 4 * e.standard_error());
}

TEST(RatePath, PiecewiseIntegralAndInverse) {
  const auto r = fj::RatePath::piecewise({0.0, 0.5}, {2.0, 4.0});
  EXPECT_DOUBLE_EQ(r.rate(0.25), 2.0);
  EXPECT_DOUBLE_EQ(r.rate(0.75), 4.0);
  EXPECT_DOUBLE_EQ(r.integrated(1.0), 3.0);
  EXPECT_DOUBLE_EQ(r.integrated(0.5, 1.0), 2.0);
  EXPECT_NEAR(r.inverse(2.0), 0.75, 1e-14);
  EXPECT_TRUE(fj::RatePath::constant(0.0).is_zero());
  EXPECT_TRUE(std::isinf(fj::RatePath::constant(0.0).inverse(1.0)));
}

TEST(MarkLaw, RadialShellQuadratureMatchesRadialIntegral) {
  // Density c r^{-d-kappa} r^{d-1} dr on [a, b]: E|y|^2 by direct integration.
  const int d = 2;
  const double a = 0.1, b = 1.0, kappa = 1.0;
  const auto law = fj::MarkLaw::radial_shell(d, a, b, kappa);
  auto radial = [&](double power) {  // integral of r^{power - 1 - kappa}
    const double e = power - kappa;
    return (std::pow(b, e) - std::pow(a, e)) / e;
  };
  const double expected = radial(2.0) / radial(0.0);
  EXPECT_NEAR(law.expectation([](const fj::Vec& y) { return y.squaredNorm(); }), expected, 1e-10);
  EXPECT_NEAR(law.expectation([](const fj::Vec&) { return 1.0; }), 1.0, 1e-12);
  const fj::Vec mean = law.expectation_vec([](const fj::Vec& y) { return y; });
  EXPECT_LT(mean.norm(), 1e-12);
  EXPECT_DOUBLE_EQ(law.max_radius(), b);
}

TEST(Noise, JumpCountMatchesIntensity) {
  const auto spec = fj::LevyMeasureSpec::compound(fj::RatePath::constant(3.0),
                                                  fj::MarkLaw::fixed(fj::Vec::Unit(2, 0)));
  fj::RunningStats count;
  for (std::uint64_t s = 0; s < 20000; ++s) count.add(static_cast<double>(fj::sample_jumps(spec, 0.0, 1.0, 5, s).size()));
  EXPECT_NEAR(count.mean(), 3.0, 4 * count.standard_error());
  EXPECT_NEAR(count.variance(), 3.0, 0.15);
}

TEST(Noise, BrownianIncrementVariance) {
  const auto grid = fj::uniform_grid(0.0, 1.0, 10);
  fj::RunningStats sq;
  for (std::uint64_t s = 0; s < 5000; ++s) {
    const auto path = fj::sample_brownian(grid, 2, 9, s);
    for (const auto& inc : path.increments) sq.add(inc.squaredNorm());
  }
  EXPECT_NEAR(sq.mean(), 2 * 0.1, 4 * sq.standard_error());
}

TEST(Noise, JumpAdaptedGridKeepsBaseIncrements) {
  const auto base = fj::uniform_grid(0.0, 1.0, 20);
  const auto spec = fj::LevyMeasureSpec::compound(fj::RatePath::constant(5.0),
                                                  fj::MarkLaw::symmetric(fj::Vec::Unit(2, 1)));
  const auto pure = fj::sample_brownian(base, 2, 3, 7);
  const auto merged = fj::sample_noise(base, spec, 3, 7);
  ASSERT_GT(merged.jumps.size(), 0u);
  EXPECT_EQ(merged.time_grid.size(), base.size() + merged.jumps.size());
  // Sum of merged increments between consecutive base points equals the pure increment.
  std::size_t b = 0;
  fj::Vec acc = fj::Vec::Zero(2);
  for (std::size_t i = 0; i < merged.steps(); ++i) {
    acc += merged.increments[i];
    if (merged.on_base_grid[i + 1]) {
      EXPECT_LT((acc - pure.increments[b]).norm(), 1e-12);
      acc.setZero();
      ++b;
    }
  }
  EXPECT_EQ(b, pure.steps());
  for (const auto& j : merged.jumps) EXPECT_EQ(merged.time_grid[j.grid_index], j.time);
}

TEST(Noise, CoarseningSumsIncrementsAndKeepsJumps) {
  const auto base = fj::uniform_grid(0.0, 1.0, 40);
  const auto spec = fj::LevyMeasureSpec::compound(fj::RatePath::constant(4.0),
                                                  fj::MarkLaw::fixed(fj::Vec::Unit(2, 0)));
  const auto fine = fj::sample_noise(base, spec, 21, 2);
  const auto coarse = fine.coarsened(4);
  EXPECT_EQ(coarse.jumps.size(), fine.jumps.size());
  fj::Vec total_f = fj::Vec::Zero(2), total_c = fj::Vec::Zero(2);
  for (const auto& v : fine.increments) total_f += v;
  for (const auto& v : coarse.increments) total_c += v;
  EXPECT_LT((total_f - total_c).norm(), 1e-12);
  std::size_t base_points = 0;
  for (char c : coarse.on_base_grid) base_points += c;
  EXPECT_EQ(base_points, 11u);
}

TEST(Noise, CsvRoundTrip) {
  const auto base = fj::uniform_grid(0.0, 1.0, 8);
  const auto spec = fj::LevyMeasureSpec::compound(fj::RatePath::constant(3.0),
                                                  fj::MarkLaw::radial_shell(2, 0.1, 1.0, 1.0));
  const auto path = fj::sample_noise(base, spec, 1, 1);
  std::stringstream ss;
  fj::write_noise_csv(ss, path);
  const auto back = fj::read_noise_csv(ss);
  ASSERT_EQ(back.time_grid.size(), path.time_grid.size());
  ASSERT_EQ(back.jumps.size(), path.jumps.size());
  for (std::size_t i = 0; i < path.time_grid.size(); ++i) EXPECT_EQ(back.time_grid[i], path.time_grid[i]);
  for (std::size_t i = 0; i < path.steps(); ++i) EXPECT_EQ(back.increments[i], path.increments[i]);
  for (std::size_t i = 0; i < path.jumps.size(); ++i) EXPECT_EQ(back.jumps[i].mark, path.jumps[i].mark);
}

TEST(Noise, GridValidation) {
  const std::vector<double> bad{0.0, 0.5, 0.5};
  EXPECT_THROW(fj::validate_grid(bad), fj::InvalidInput);
  const std::vector<double> out{0.0, 1.5};
  EXPECT_THROW(fj::validate_grid(out), fj::InvalidInput);
}

TEST(Compensator, FixedMarkClosedForm) {
  const auto spec = fj::LevyMeasureSpec::compound(fj::RatePath::piecewise({0.0, 0.5}, {1.0, 3.0}),
                                                  fj::MarkLaw::fixed(fj::Vec::Unit(2, 0) * 2.0));
  // Lambda(1) = 2; g(y) = |y|^2 = 4.
  EXPECT_NEAR(fj::compensator_integral(spec, [](const fj::Vec& y) { return y.squaredNorm(); }, 1.0), 8.0, 1e-13);
  const fj::Vec v = fj::compensator_integral_vec(spec, [](const fj::Vec& y) { return y; }, 0.5);
  EXPECT_NEAR(v[0], 1.0, 1e-13);
  EXPECT_THROW(fj::compensator_integral(spec, [](const fj::Vec&) { return INFINITY; }, 1.0), fj::InvalidInput);
}

TEST(Compensator, CertificatesAndGate) {
  auto spec = fj::LevyMeasureSpec::compound(fj::RatePath::constant(2.0), fj::MarkLaw::fixed(fj::Vec::Unit(2, 0)));
  const std::vector<double> ps{1.0, 2.0};
  spec.certify(ps);
  // |y|^2 (1 + |y|^2)^p with |y| = 1, rate 2 on [0, 1].
  EXPECT_NEAR(spec.moment_certificates.at(2.0), 2.0 * 4.0, 1e-12);
  EXPECT_NO_THROW(spec.require_certificate(1.5));
  EXPECT_THROW(spec.require_certificate(3.0), fj::GateViolation);
}

TEST(ExponentialMoment, MonteCarloMatchesClosedForm) {
  const auto spec = fj::LevyMeasureSpec::compound(fj::RatePath::constant(1.0),
                                                  fj::MarkLaw::radial_shell(2, 0.1, 1.0, 1.0));
  const auto L = [](const fj::Vec& y) { return 0.8 * y.norm(); };
  const auto r = fj::exponential_moment_check(L, 0.8, spec, 1.0, 20000, 13);
  EXPECT_NEAR(r.mc_estimate, r.closed_form, 4 * r.standard_error);
  EXPECT_THROW(fj::exponential_moment_check(L, 0.5, spec, 1.0, 10, 13), fj::InvalidInput);
}
