#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "flowjump/manifest.hpp"

namespace flowjump {

/// Smoke mode divides every sample count by this factor and widens the
/// absolute tolerances of the statistical criteria by its square root.
/// Criteria stated in standard errors keep their multiplier, since the
/// standard error itself grows by the same factor.
inline constexpr int kSmokeReduction = 10;

struct AcceptanceOptions {
  std::uint64_t seed = 7;
  bool smoke = false;
  std::set<int> only;  // empty: all criteria
  std::function<void(const CheckResult&)> on_result;
};

/// Runs the acceptance criteria in order; one CheckResult per criterion.
std::vector<CheckResult> run_acceptance(const AcceptanceOptions& options = {});

/// Individual criteria, each self-contained and seed-addressed.
CheckResult criterion_determinant_identities(std::uint64_t seed, bool smoke);
CheckResult criterion_beta_gate(std::uint64_t seed, bool smoke);
CheckResult criterion_exponential_moment(std::uint64_t seed, bool smoke);
CheckResult criterion_liouville(std::uint64_t seed, bool smoke);
CheckResult criterion_explicit_vs_direct(std::uint64_t seed, bool smoke);
CheckResult criterion_change_of_variables(std::uint64_t seed, bool smoke);
CheckResult criterion_rough_cauchy(std::uint64_t seed, bool smoke);
CheckResult criterion_heat_kernel(std::uint64_t seed, bool smoke);
CheckResult criterion_poisson_mixture(std::uint64_t seed, bool smoke);
CheckResult criterion_ou_variance(std::uint64_t seed, bool smoke);
CheckResult criterion_uniqueness_coupling(std::uint64_t seed, bool smoke);
CheckResult criterion_semigroup(std::uint64_t seed, bool smoke);

}  // namespace flowjump
