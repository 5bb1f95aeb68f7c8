#include "flowjump/fp_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "flowjump/ensemble.hpp"
#include "flowjump/maximal.hpp"

namespace flowjump {

std::vector<ResidualRow> weak_residual(const PideSolution& sol, const GeneratorSpec& spec,
                                       const std::vector<std::shared_ptr<const TestFunction>>& family) {
  const auto& times = sol.times();
  if (times.size() < 3) throw InvalidInput("weak_residual: need at least 3 observation times");
  const double dt = times[1] - times[0];
  for (std::size_t k = 1; k < times.size(); ++k)
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw InvalidInput("weak_residual: observation times must be uniform");

  std::vector<ResidualRow> rows;
  for (const auto& phi : family) {
    for (std::size_t k = 1; k + 1 < times.size(); ++k) {
      std::vector<double> r;
      r.reserve(sol.particles());
      for (std::size_t i = 0; i < sol.particles(); ++i) {
        if (sol.excluded(i)) continue;
        const double diff = (phi->value(sol.position(k + 1, i)) - phi->value(sol.position(k - 1, i))) / (2.0 * dt);
        r.push_back(diff - apply_generator(spec, *phi, times[k], sol.position(k, i)));
      }
      const Estimate e = estimate(r);
      rows.push_back({phi->name(), times[k], e.mean, e.standard_error});
    }
  }
  return rows;
}

double weighted_norm(const std::vector<double>& values, const DensityGrid& grid, double q_star) {
  if (!(q_star > 1.0)) throw InvalidInput("weighted_norm: q* must exceed 1");
  const std::vector<Vec> nodes = grid.nodes();
  if (nodes.size() != values.size()) throw InvalidInput("weighted_norm: value count does not match grid");
  std::vector<double> terms(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    terms[i] = std::pow(values[i], q_star) * std::pow(1.0 + nodes[i].squaredNorm(), (q_star - 1.0) * grid.dim);
  return pairwise_sum(terms) * grid.cell_volume();
}

ClassMembershipReport class_membership(const PideSolution& sol, double q_star, const DensityGrid& grid,
                                       double bandwidth) {
  if (!(q_star > 1.0)) throw InvalidInput("class_membership: q* must exceed 1");
  ClassMembershipReport rep;
  rep.q_star = q_star;
  const std::size_t half = sol.particles() / 2;
  for (std::size_t k = 0; k < sol.times().size(); ++k) {
    rep.sup_full = std::max(rep.sup_full,
                            weighted_norm(evaluate_on_grid(sol.density(k, bandwidth), grid), grid, q_star));
    rep.sup_half = std::max(rep.sup_half,
                            weighted_norm(evaluate_on_grid(sol.density(k, bandwidth, half), grid), grid, q_star));
  }
  rep.finite = std::isfinite(rep.sup_full) && std::isfinite(rep.sup_half);
  rep.relative_change = std::abs(rep.sup_full - rep.sup_half) / rep.sup_full;
  rep.stable = rep.finite && rep.relative_change <= kClassStabilityTolerance;
  return rep;
}

std::vector<RepresentationRow> representation_check(const PideSolution& sol,
                                                    const std::vector<std::shared_ptr<const TestFunction>>& family,
                                                    const DensityGrid& grid) {
  std::vector<RepresentationRow> rows;
  const std::vector<Vec> nodes = grid.nodes();
  for (std::size_t k = 0; k < sol.times().size(); ++k) {
    const std::vector<double> u = evaluate_on_grid(sol.density(k), grid);
    for (const auto& phi : family) {
      RepresentationRow row;
      row.name = phi->name();
      row.t = sol.times()[k];
      const Estimate e = sol.average(k, [&](const Vec& x) { return phi->value(x); });
      row.particle_average = e.mean;
      row.standard_error = e.standard_error;
      std::vector<double> terms(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) terms[i] = u[i] * phi->value(nodes[i]);
      row.density_integral = pairwise_sum(terms) * grid.cell_volume();
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

std::vector<double> interval_grid(double a, double b, std::size_t steps_per_unit) {
  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround((b - a) * steps_per_unit)));
  return uniform_grid(a, b, steps);
}

Vec propagate(const FlowStepper& stepper, const SdeModel& model, const std::vector<double>& grid, const Vec& x,
              std::uint64_t seed, std::uint64_t stream) {
  if (grid.size() < 2) return x;
  const NoisePath noise = sample_noise(grid, model.levy, seed, stream);
  FlowState s = stepper.init(x);
  stepper.run(s, noise);
  return s.x;
}

}  // namespace

SemigroupReport semigroup_check(const GeneratorSpec& spec, double s, double r, double t,
                                const TestFunction& phi, const std::vector<Vec>& xs, std::uint64_t seed,
                                SemigroupOptions options) {
  if (!(0.0 <= s && s <= r && r < t && t <= 1.0))
    throw InvalidInput("semigroup_check: need 0 <= s <= r < t <= 1");
  const auto [model, scheme] = pide_model(spec, 1.0);
  model.validate();
  const FlowStepper stepper(model, scheme);
  const std::vector<double> direct_grid = interval_grid(s, t, options.steps_per_unit);
  const std::vector<double> outer_grid = r > s ? interval_grid(s, r, options.steps_per_unit) : std::vector<double>{s};
  const std::vector<double> inner_grid = interval_grid(r, t, options.steps_per_unit);

  SemigroupReport report;
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    const Vec& x = xs[xi];
    const std::uint64_t point_stream = derive_stream(xi, 0);
    std::vector<double> direct(options.direct_paths);
    parallel_for(direct.size(), [&](std::size_t p) {
      direct[p] = phi.value(propagate(stepper, model, direct_grid, x, seed, derive_stream(point_stream, p)));
    });
    std::vector<double> nested(options.outer_paths);
    parallel_for(nested.size(), [&](std::size_t p) {
      const std::uint64_t outer_stream = derive_stream(point_stream, p);
      const Vec xr = propagate(stepper, model, outer_grid, x, seed + 1, outer_stream);
      std::vector<double> inner(options.inner_paths);
      for (std::size_t j = 0; j < inner.size(); ++j)
        inner[j] = phi.value(propagate(stepper, model, inner_grid, xr, seed + 2, derive_stream(outer_stream, j)));
      nested[p] = pairwise_sum(inner) / static_cast<double>(inner.size());
    });
    SemigroupRow row;
    row.x = x;
    row.direct = estimate(direct);
    row.nested = estimate(nested);
    row.deviation = std::abs(row.direct.mean - row.nested.mean);
    row.pooled_se = std::hypot(row.direct.standard_error, row.nested.standard_error);
    report.max_deviation = std::max(report.max_deviation, row.deviation);
    report.max_z = std::max(report.max_z, row.pooled_se > 0.0 ? row.deviation / row.pooled_se
                                                              : (row.deviation > 0.0 ? INFINITY : 0.0));
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

/// M_{2R}|grad b| tabulated on a coarse grid over [-R, R]^d, nearest-node lookup.
class MaximalTable {
 public:
  MaximalTable(const DriftTerm& drift, double R, double step) : R_(R) {
    dim_ = drift.dim();
    if (dim_ > 3) throw InvalidInput("pathwise_uniqueness_diagnostic: maximal function needs d <= 3");
    const SampledField grad = SampledField::sample(dim_, 2.0 * R, step, [&](const Vec& x) {
      try {
        return drift.gradient(0.0, x).norm();
      } catch (const SingularPoint&) {
        return 0.0;  // a single node on a null set
      }
    });
    per_axis_ = 41;
    h_ = 2.0 * R / (per_axis_ - 1);
    std::size_t total = 1;
    for (int a = 0; a < dim_; ++a) total *= per_axis_;
    values_.resize(total);
    parallel_for(total, [&](std::size_t i) {
      Vec x(dim_);
      std::size_t rest = i;
      for (int a = 0; a < dim_; ++a) {
        x[a] = -R + h_ * static_cast<double>(rest % per_axis_);
        rest /= per_axis_;
      }
      values_[i] = local_maximal_function(grad, 2.0 * R, x);
    });
  }

  double operator()(const Vec& x) const {
    std::size_t index = 0, stride = 1;
    for (int a = 0; a < dim_; ++a) {
      const long k = std::clamp(std::lround((x[a] + R_) / h_), 0L, static_cast<long>(per_axis_ - 1));
      index += static_cast<std::size_t>(k) * stride;
      stride *= per_axis_;
    }
    return values_[index];
  }

 private:
  int dim_ = 0;
  double R_ = 0.0;
  double h_ = 0.0;
  std::size_t per_axis_ = 0;
  std::vector<double> values_;
};

}  // namespace

CouplingReport pathwise_uniqueness_diagnostic(const GeneratorSpec& spec, const InitialDensity& init,
                                              const std::vector<double>& deltas, std::uint64_t seed,
                                              CouplingOptions options) {
  if (deltas.empty()) throw InvalidInput("pathwise_uniqueness_diagnostic: empty delta ladder");
  for (double d : deltas)
    if (!(d > 0.0)) throw InvalidInput("pathwise_uniqueness_diagnostic: delta must be positive");
  if (!(options.R > 0.0)) throw InvalidInput("pathwise_uniqueness_diagnostic: R must be positive");
  if (init.dim() != spec.dim()) throw InvalidInput("pathwise_uniqueness_diagnostic: dimension mismatch");
  const auto [model, scheme] = pide_model(spec, 1.0);
  model.validate();
  const FlowStepper stepper(model, scheme);
  const MaximalTable maximal(model.field.drift_term(), options.R, options.maximal_step);
  const std::vector<double> grid = uniform_grid(0.0, 1.0, options.fine_steps);
  const std::size_t n = options.particles;

  struct PathResult {
    double sup_gap = 0.0;
    double maximal_integral = 0.0;
    bool stopped = false;
    bool excluded = false;
  };
  std::vector<PathResult> results(n);
  parallel_for(n, [&](std::size_t i) {
    RandomStream rng(seed, i, Channel::Initial);
    const Vec x0 = init.sample(rng);
    const NoisePath fine = sample_noise(grid, model.levy, seed, i);
    const NoisePath coarse = fine.coarsened(options.coarsen_factor);
    FlowState a = stepper.init(x0);
    FlowState b = stepper.init(x0);
    PathResult& res = results[i];
    std::size_t kc = 0;
    double last_t = 0.0;
    double last_m = maximal(a.x) + maximal(b.x);
    for (std::size_t k = 0; k < fine.steps(); ++k) {
      stepper.advance(a, fine, k);
      const double tf = fine.time_grid[k + 1];
      if (kc + 1 >= coarse.time_grid.size() || coarse.time_grid[kc + 1] != tf) continue;
      stepper.advance(b, coarse, kc);
      ++kc;
      if (a.divergent || b.divergent || !a.x.allFinite() || !b.x.allFinite()) {
        res.excluded = true;
        return;
      }
      res.maximal_integral += last_m * (tf - last_t);
      res.sup_gap = std::max(res.sup_gap, (a.x - b.x).norm());
      if (std::max(a.x.norm(), b.x.norm()) > options.R) {
        res.stopped = true;
        return;
      }
      last_t = tf;
      last_m = maximal(a.x) + maximal(b.x);
    }
  });

  CouplingReport report;
  report.R = options.R;
  std::vector<double> gaps, integrals;
  std::size_t stopped = 0;
  for (const auto& r : results) {
    if (r.excluded) {
      ++report.excluded;
      continue;
    }
    gaps.push_back(r.sup_gap);
    integrals.push_back(r.maximal_integral);
    stopped += r.stopped ? 1 : 0;
  }
  if (gaps.empty()) throw ConsistencyError("pathwise_uniqueness_diagnostic: every path diverged");
  report.mean_sup_gap = estimate(gaps).mean;
  report.maximal_integral = estimate(integrals).mean;
  report.stopped_fraction = static_cast<double>(stopped) / static_cast<double>(gaps.size());
  report.budget = kUniquenessC * (1.0 + report.maximal_integral);
  double lo = INFINITY, hi = 0.0;
  report.bounded = true;
  for (double delta : deltas) {
    std::vector<double> v(gaps.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) v[i] = std::log1p(gaps[i] * gaps[i] / (delta * delta));
    CouplingRow row{delta, estimate(v)};
    lo = std::min(lo, row.functional.mean);
    hi = std::max(hi, row.functional.mean);
    report.bounded = report.bounded && row.functional.mean <= report.budget;
    report.rows.push_back(row);
  }
  report.ratio = hi == 0.0 ? 1.0 : hi / lo;
  return report;
}

void write_residual_csv(std::ostream& out, const std::vector<ResidualRow>& rows) {
  out << "name,t,residual,se\n";
  for (const auto& r : rows)
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", r.name, r.t, r.residual, r.standard_error);
}

void write_coupling_csv(std::ostream& out, const CouplingReport& report) {
  out << "delta,functional,se,budget\n";
  for (const auto& r : report.rows)
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", r.delta, r.functional.mean,
                       r.functional.standard_error, report.budget);
}

}  // namespace flowjump
