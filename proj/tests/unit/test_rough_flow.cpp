#include <gtest/gtest.h>

#include <sstream>

#include "flowjump/corpus.hpp"
#include "flowjump/determinant.hpp"
#include "flowjump/rough_flow.hpp"

namespace fj = flowjump;

namespace {

fj::SdeModel corpus_model(const std::string& drift) {
  fj::FieldSpec fs{.dim = 2, .drift = drift, .diffusion = "constant", .jump = "additive"};
  fs.params = {{"sigma", 0.5}};
  fs.alpha = 0.05;
  fs.sobolev_q = 1.5;
  fj::Vec y0(2);
  y0 << 0.3, 0.2;
  return {fj::make_field(fs),
          fj::LevyMeasureSpec::compound(fj::RatePath::constant(1.0), fj::MarkLaw::symmetric(y0))};
}

const fj::FlowSequence& smooth_sequence() {
  static const fj::FlowSequence seq = fj::FlowSequence::build(
      corpus_model("smooth"), {8, 16, 32, 64}, fj::mu_grid(2, 16), fj::uniform_grid(0.0, 1.0, 100), 7, 16);
  return seq;
}

}  // namespace

TEST(RoughGate, RejectsSmallBeta) {
  fj::FieldSpec fs{.dim = 2, .drift = "unit_radial"};
  fs.alpha = 0.25;  // beta = 1
  fs.sobolev_q = 1.5;  // needs beta > 2
  EXPECT_THROW(fj::check_rough_gate(fj::make_field(fs)), fj::GateViolation);
  fs.alpha = 0.05;
  EXPECT_NO_THROW(fj::check_rough_gate(fj::make_field(fs)));
  EXPECT_THROW(fj::FlowSequence::build({fj::make_field({.dim = 2, .drift = "unit_radial", .alpha = 0.25,
                                                        .sobolev_q = 1.5}),
                                        fj::LevyMeasureSpec::none(2)},
                                       {8, 16}, fj::mu_grid(2, 4), fj::uniform_grid(0.0, 1.0, 4), 1, 2),
               fj::GateViolation);
}

// The budget constants are calibrated on the smooth corpus field: C2 is twice
// the largest Psi delta / gap seen over the dyadic pairs and delta ladder, and
// C1 absorbs the Monte Carlo floor. This test replays a reduced calibration.
TEST(StabilityBudget, CalibrationOnSmoothCorpus) {
  const auto& seq = smooth_sequence();
  EXPECT_EQ(seq.divergent_paths(), 0u);
  double worst_slope = 0.0, worst_fill = 0.0;
  for (auto [n, m] : {std::pair{8, 16}, {16, 32}, {32, 64}}) {
    for (double delta : {0.1, 0.01, 0.001}) {
      const auto r = fj::stability_functional(seq, n, m, delta, 10.0);
      ASSERT_GT(r.coefficient_gap, 0.0);
      worst_slope = std::max(worst_slope, r.psi * delta / r.coefficient_gap);
      worst_fill = std::max(worst_fill, r.psi / r.rhs_budget);
      EXPECT_LE(r.psi, r.rhs_budget) << n << "," << m << " delta " << delta;
    }
  }
  EXPECT_LE(2.0 * worst_slope, fj::kBudgetC2 * 1.5);
  EXPECT_GE(2.0 * worst_slope, fj::kBudgetC2 / 2.0);
  EXPECT_GT(worst_fill, 0.05);
}

TEST(StabilityBudget, RegimeFlagAndMonotoneDelta) {
  const auto& seq = smooth_sequence();
  EXPECT_TRUE(fj::stability_functional(seq, 16, 32, 0.5, 10.0).small_delta_regime);
  EXPECT_FALSE(fj::stability_functional(seq, 16, 32, 0.1, 10.0).small_delta_regime);
  EXPECT_EQ(fj::psi_delta_violations(seq, 16, 32, {0.1, 0.01, 0.001}, 10.0), 0u);
  // log(x/delta^2 + 1) grows as delta shrinks.
  EXPECT_LT(fj::stability_functional(seq, 16, 32, 0.1, 10.0).psi,
            fj::stability_functional(seq, 16, 32, 0.01, 10.0).psi);
}

TEST(CauchyDiagnostic, SmoothCorpusDecreases) {
  const auto table = fj::cauchy_diagnostic(smooth_sequence(), 0.05);
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_TRUE(table.strictly_decreasing);
  EXPECT_TRUE(table.below_threshold);
}

TEST(CauchyDiagnostic, UnitRadialDecreasesOnReducedGrid) {
  const auto seq = fj::FlowSequence::build(corpus_model("unit_radial"), {8, 16, 32}, fj::mu_grid(2, 12),
                                           fj::uniform_grid(0.0, 1.0, 100), 3, 16);
  const auto table = fj::cauchy_diagnostic(seq, 0.05);
  EXPECT_TRUE(table.strictly_decreasing);
  for (std::size_t k = 1; k < table.rows.size(); ++k) EXPECT_LT(table.rows[k].phi, table.rows[k - 1].phi);
}

TEST(StabilityCsv, Header) {
  std::ostringstream out;
  fj::write_stability_csv(out, {fj::stability_functional(smooth_sequence(), 8, 16, 0.1, 10.0)});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "n,m,delta,R,Psi,Phi,G_mass,rhs_budget");
}

TEST(JumpIncrement, BoundHoldsForSmoothJumpCoefficient) {
  fj::FieldSpec fs{.dim = 2, .drift = "smooth", .jump = "smooth"};
  fs.params = {{"jump_amplitude", 0.05}};
  fs.alpha = 0.05;
  fs.sobolev_q = 1.5;
  const fj::SdeModel model{fj::make_field(fs),
                           fj::LevyMeasureSpec::compound(fj::RatePath::constant(1.0),
                                                         fj::MarkLaw::radial_shell(2, 0.1, 1.0, 1.0))};
  const auto r = fj::jump_increment_sweep(model, 64, 128, 0.1, 2.0, 20000, 5);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.samples, 20000u);
  EXPECT_LE(r.worst_ratio, 1.0);
  EXPECT_THROW(fj::jump_increment_sweep(model, 8, 16, 0.1, 2.0, 10, 5), fj::InvalidInput);
}

TEST(AeFlowBound, RequiresIntegrabilityExponent) {
  const auto& seq = smooth_sequence();
  const double beta = fj::beta_alpha(2, 0.05);
  const std::vector<fj::NamedFunction> family{
      {"gaussian", [](const fj::Vec& x) { return std::exp(-x.squaredNorm()); }},
      {"shifted", [](const fj::Vec& x) { return std::exp(-(x - fj::Vec::Ones(2)).squaredNorm()); }}};
  EXPECT_THROW(fj::ae_flow_bound(seq, 32, family, 1.0 + 0.5 / beta), fj::GateViolation);
  const auto rep = fj::ae_flow_bound(seq, 32, family, 2.0);
  ASSERT_EQ(rep.entries.size(), 2u);
  for (const auto& e : rep.entries) EXPECT_GT(e.K, 0.0);
  EXPECT_GE(rep.spread, 1.0);
}

TEST(UniquenessReplay, KernelChoiceIsImmaterialForSmoothField) {
  const auto est = fj::uniqueness_replay(corpus_model("smooth"), 32, fj::mu_grid(2, 8),
                                         fj::uniform_grid(0.0, 1.0, 50), 1, 8);
  EXPECT_LT(est.mean, 1e-3);
}
