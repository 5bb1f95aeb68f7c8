#include "flowjump/rough_flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "flowjump/determinant.hpp"

namespace flowjump {

void check_rough_gate(const CoefficientField& field) {
  const auto& reg = field.regularity();
  if (field.dim() < 2) throw InvalidInput("rough flow gate needs d >= 2");
  const double beta = beta_alpha(field.dim(), reg.alpha);
  const double threshold = 1.0 / (reg.sobolev_q - 1.0);
  if (!(beta > threshold))
    throw GateViolation(fmt::format("beta_alpha = {:.6g} must exceed 1/(q-1) = {:.6g}", beta, threshold),
                        beta, threshold);
}

FlowSequence FlowSequence::build(const SdeModel& base, std::vector<int> levels, InitialGrid grid,
                                 std::vector<double> time_grid, std::uint64_t seed, std::size_t n_paths,
                                 MollifierKernel kernel, std::vector<double> observation_times) {
  check_rough_gate(base.field);
  if (levels.empty()) throw InvalidInput("FlowSequence: no levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1]) throw InvalidInput("FlowSequence: levels must be strictly increasing");
  if (grid.dim != base.dim()) throw InvalidInput("FlowSequence: grid dimension mismatch");
  validate_grid(time_grid);

  FlowSequence seq(base);
  seq.levels_ = std::move(levels);
  seq.grid_ = std::move(grid);
  seq.time_grid_ = std::move(time_grid);
  seq.n_paths_ = n_paths;
  for (int n : seq.levels_) seq.models_.push_back(SdeModel{mollify(base.field, n, kernel), base.levy});

  // observation times must sit on the base grid
  std::vector<std::size_t> obs_base_index;
  for (double t : observation_times) {
    auto it = std::find_if(seq.time_grid_.begin(), seq.time_grid_.end(),
                           [t](double g) { return std::abs(g - t) < 1e-12; });
    if (it == seq.time_grid_.end()) throw InvalidInput("FlowSequence: observation time not on the grid");
    obs_base_index.push_back(static_cast<std::size_t>(it - seq.time_grid_.begin()));
  }
  seq.observation_times_ = std::move(observation_times);

  const std::size_t L = seq.levels_.size();
  const std::size_t P = L * (L - 1) / 2;
  const std::size_t N = seq.grid_.points.size();
  const std::size_t O = seq.observation_times_.size();
  const int d = base.dim();
  seq.sup_norm_.assign(n_paths * L * N, 0.0);
  seq.sup_distance_.assign(n_paths * P * N, 0.0);
  seq.observed_.assign(n_paths * L * O * N * d, 0.0);

  std::vector<FlowStepper> steppers;
  for (const auto& m : seq.models_) steppers.emplace_back(m, SchemeOptions{});
  std::vector<char> divergent(n_paths, 0);

  parallel_for(n_paths, [&](std::size_t path) {
    const NoisePath noise = sample_noise(seq.time_grid_, base.levy, seed, path);
    // map base-grid observation indices into the jump-adapted grid
    std::vector<int> obs_at(noise.time_grid.size(), -1);
    for (std::size_t o = 0; o < O; ++o) {
      const double t = seq.time_grid_[obs_base_index[o]];
      auto it = std::lower_bound(noise.time_grid.begin(), noise.time_grid.end(), t - 1e-14);
      obs_at[static_cast<std::size_t>(it - noise.time_grid.begin())] = static_cast<int>(o);
    }
    std::vector<FlowState> states(L);
    for (std::size_t i = 0; i < N; ++i) {
      const Vec& x0 = seq.grid_.points[i];
      for (std::size_t l = 0; l < L; ++l) states[l] = steppers[l].init(x0);
      auto update = [&](std::size_t grid_index) {
        for (std::size_t l = 0; l < L; ++l) {
          double& s = seq.sup_norm_[(path * L + l) * N + i];
          s = std::max(s, states[l].x.norm());
        }
        std::size_t pair = 0;
        for (std::size_t a = 0; a < L; ++a)
          for (std::size_t b = a + 1; b < L; ++b, ++pair) {
            double& s = seq.sup_distance_[(path * P + pair) * N + i];
            s = std::max(s, (states[a].x - states[b].x).norm());
          }
        const int o = obs_at[grid_index];
        if (o >= 0)
          for (std::size_t l = 0; l < L; ++l)
            for (int k = 0; k < d; ++k)
              seq.observed_[(((path * L + l) * O + o) * N + i) * d + k] = states[l].x[k];
      };
      update(0);
      for (std::size_t step = 0; step < noise.steps(); ++step) {
        bool bad = false;
        for (std::size_t l = 0; l < L; ++l) {
          steppers[l].advance(states[l], noise, step);
          bad = bad || states[l].divergent;
        }
        if (bad) {
          divergent[path] = 1;
          break;
        }
        update(step + 1);
      }
    }
  });
  for (char c : divergent) seq.divergent_ += c ? 1 : 0;
  return seq;
}

std::size_t FlowSequence::level_index(int n) const {
  auto it = std::find(levels_.begin(), levels_.end(), n);
  if (it == levels_.end()) throw InvalidInput(fmt::format("level {} is not in the sequence", n));
  return static_cast<std::size_t>(it - levels_.begin());
}

std::size_t FlowSequence::pair_index(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  const std::size_t L = levels_.size();
  // pairs enumerated as (0,1), (0,2), ..., (1,2), ...
  return a * L - a * (a + 1) / 2 + (b - a - 1);
}

double FlowSequence::sup_norm(std::size_t path, std::size_t level, std::size_t point) const {
  return sup_norm_[(path * levels_.size() + level) * grid_.points.size() + point];
}

double FlowSequence::sup_distance(std::size_t path, std::size_t a, std::size_t b, std::size_t point) const {
  if (a == b) return 0.0;
  const std::size_t L = levels_.size();
  const std::size_t P = L * (L - 1) / 2;
  return sup_distance_[(path * P + pair_index(a, b)) * grid_.points.size() + point];
}

Vec FlowSequence::observed(std::size_t path, std::size_t level, std::size_t obs, std::size_t point) const {
  const int d = grid_.dim;
  const std::size_t L = levels_.size();
  const std::size_t O = observation_times_.size();
  const std::size_t N = grid_.points.size();
  Vec x(d);
  for (int k = 0; k < d; ++k) x[k] = observed_[(((path * L + level) * O + obs) * N + point) * d + k];
  return x;
}

StabilityReport stability_functional(const FlowSequence& seq, int n, int m, double delta, double R) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("stability_functional: delta must lie in (0, 1)");
  if (!(R > 0.0)) throw InvalidInput("stability_functional: R must be positive");
  const std::size_t a = seq.level_index(n);
  const std::size_t b = seq.level_index(m);
  StabilityReport r;
  r.n = n;
  r.m = m;
  r.delta = delta;
  r.R = R;
  r.small_delta_regime = n > 4.0 / delta && m > 4.0 / delta;
  const auto& grid = seq.grid();
  const std::size_t N = grid.points.size();
  std::vector<double> psi(seq.paths()), phi(seq.paths()), mass(seq.paths());
  std::vector<double> t_psi(N), t_phi(N), t_mass(N);
  for (std::size_t p = 0; p < seq.paths(); ++p) {
    for (std::size_t i = 0; i < N; ++i) {
      const double z = seq.sup_distance(p, a, b, i);
      const bool in_g = std::max(seq.sup_norm(p, a, i), seq.sup_norm(p, b, i)) <= R;
      t_phi[i] = grid.weights[i] * z;
      t_psi[i] = in_g ? grid.weights[i] * std::log1p(z * z / (delta * delta)) : 0.0;
      t_mass[i] = in_g ? grid.weights[i] : 0.0;
    }
    psi[p] = pairwise_sum(t_psi);
    phi[p] = pairwise_sum(t_phi);
    mass[p] = pairwise_sum(t_mass);
  }
  const Estimate e_psi = estimate(psi), e_phi = estimate(phi), e_mass = estimate(mass);
  r.psi = e_psi.mean;
  r.psi_se = e_psi.standard_error;
  r.phi = e_phi.mean;
  r.phi_se = e_phi.standard_error;
  r.g_mass = e_mass.mean;
  r.empty_set = r.g_mass == 0.0;
  if (n != m && grid.dim <= 3 && std::isfinite(R)) {
    const auto& fa = seq.level_model(a).field;
    const auto& fb = seq.level_model(b).field;
    const double q = seq.base().field.regularity().sobolev_q;
    const double db = drift_lq_distance(fa.drift_term(), fb.drift_term(), q, R);
    const double ds = diffusion_lq_distance(fa.diffusion_term(), fb.diffusion_term(), 2.0 * q, R);
    r.coefficient_gap = db + ds * ds;
  }
  r.rhs_budget = kBudgetC1 + kBudgetC2 / delta * r.coefficient_gap;
  return r;
}

std::size_t psi_delta_violations(const FlowSequence& seq, int n, int m, std::vector<double> deltas, double R) {
  std::sort(deltas.begin(), deltas.end());
  const std::size_t a = seq.level_index(n);
  const std::size_t b = seq.level_index(m);
  std::size_t violations = 0;
  for (std::size_t p = 0; p < seq.paths(); ++p)
    for (std::size_t i = 0; i < seq.grid().points.size(); ++i) {
      if (std::max(seq.sup_norm(p, a, i), seq.sup_norm(p, b, i)) > R) continue;
      const double z = seq.sup_distance(p, a, b, i);
      double prev = INFINITY;
      for (double delta : deltas) {
        const double v = std::log1p(z * z / (delta * delta));
        if (v > prev) ++violations;
        prev = v;
      }
    }
  return violations;
}

CauchyTable cauchy_diagnostic(const FlowSequence& seq, double threshold) {
  const auto& lv = seq.levels();
  if (lv.size() < 3) throw InvalidInput("cauchy_diagnostic: need at least three levels");
  CauchyTable table;
  for (std::size_t k = 0; k + 1 < lv.size(); ++k) {
    const StabilityReport r = stability_functional(seq, lv[k], lv[k + 1], 0.5, INFINITY);
    table.rows.push_back({lv[k], lv[k + 1], r.phi, r.phi_se});
  }
  table.strictly_decreasing = true;
  for (std::size_t k = 1; k < table.rows.size(); ++k)
    if (!(table.rows[k].phi < table.rows[k - 1].phi)) table.strictly_decreasing = false;
  table.below_threshold = table.rows.back().phi < threshold;
  table.converged = table.strictly_decreasing && table.below_threshold;
  return table;
}

AeFlowReport ae_flow_bound(const FlowSequence& seq, int level, const std::vector<NamedFunction>& family,
                           double p) {
  const auto& field = seq.base().field;
  const double beta = beta_alpha(field.dim(), field.regularity().alpha);
  if (!(p > 1.0 + 1.0 / beta))
    throw GateViolation("ae_flow_bound: p must exceed 1 + 1/beta_alpha", p, 1.0 + 1.0 / beta);
  const std::size_t l = seq.level_index(level);
  const auto& grid = seq.grid();
  const std::size_t N = grid.points.size();
  AeFlowReport report;
  report.p = p;
  double kmin = INFINITY, kmax = 0.0;
  for (const auto& fn : family) {
    AeFlowEntry e;
    e.name = fn.name;
    std::vector<double> terms(N);
    for (std::size_t i = 0; i < N; ++i) terms[i] = grid.weights[i] * fn.fn(grid.points[i]);
    double lhs = pairwise_sum(terms);  // t = 0
    for (std::size_t o = 0; o < seq.observation_times().size(); ++o) {
      std::vector<double> per_path(seq.paths());
      for (std::size_t path = 0; path < seq.paths(); ++path) {
        for (std::size_t i = 0; i < N; ++i) terms[i] = grid.weights[i] * fn.fn(seq.observed(path, l, o, i));
        per_path[path] = pairwise_sum(terms);
      }
      lhs = std::max(lhs, estimate(per_path).mean);
    }
    e.lhs = lhs;
    e.norm = std::pow(mu_integral([&](const Vec& x) { return std::pow(std::abs(fn.fn(x)), p); }, grid.dim), 1.0 / p);
    e.K = e.lhs / e.norm;
    kmin = std::min(kmin, e.K);
    kmax = std::max(kmax, e.K);
    report.entries.push_back(std::move(e));
  }
  report.spread = kmax / kmin;
  return report;
}

JumpIncrementReport jump_increment_sweep(const SdeModel& base, int n, int m, double delta, double R,
                            std::size_t samples, std::uint64_t seed, MollifierKernel kernel) {
  if (!(n > 4.0 / delta && m > 4.0 / delta))
    throw InvalidInput("jump_increment_sweep: requires n, m > 4/delta");
  const int d = base.dim();
  const CoefficientField fn = mollify(base.field, n, kernel);
  const CoefficientField fm = mollify(base.field, m, kernel);
  const auto& L1 = base.field.regularity().L1;
  RandomStream rng(seed, 0, Channel::Auxiliary);
  RandomStream marks(seed, 1, Channel::JumpMarks);
  JumpIncrementReport report;
  for (std::size_t s = 0; s < samples; ++s) {
    Vec x(d), z(d);
    for (int k = 0; k < d; ++k) {
      x[k] = rng.normal();
      z[k] = rng.normal();
    }
    x *= R * std::pow(rng.uniform(), 1.0 / d) / x.norm();
    const double zr = delta / 100.0 * std::pow(100.0 * R / delta, rng.uniform());
    z *= zr / z.norm();
    const Vec y = base.levy.marks.sample(marks);
    const double lhs =
        ((z + fn.jump(0.0, x + z, y) - fm.jump(0.0, x, y)).squaredNorm() - z.squaredNorm()) /
        (z.squaredNorm() + delta * delta);
    const double l1 = L1(y);
    const double bound = 4.0 * (l1 + l1 * l1);
    report.worst_excess = std::max(report.worst_excess, lhs - bound);
    if (bound > 0.0) report.worst_ratio = std::max(report.worst_ratio, lhs / bound);
    if (lhs > bound + 1e-12) report.pass = false;
    ++report.samples;
  }
  return report;
}

Estimate uniqueness_replay(const SdeModel& base, int level, const InitialGrid& grid,
                           const std::vector<double>& time_grid, std::uint64_t seed, std::size_t n_paths) {
  check_rough_gate(base.field);
  const SdeModel m1{mollify(base.field, level, MollifierKernel::Bump), base.levy};
  const SdeModel m2{mollify(base.field, level, MollifierKernel::Polynomial), base.levy};
  FlowStepper s1(m1, {}), s2(m2, {});
  std::vector<double> per_path(n_paths);
  parallel_for(n_paths, [&](std::size_t p) {
    const NoisePath noise = sample_noise(time_grid, base.levy, seed, p);
    std::vector<double> terms(grid.points.size());
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
      FlowState a = s1.init(grid.points[i]);
      FlowState b = s2.init(grid.points[i]);
      double sup = 0.0;
      for (std::size_t k = 0; k < noise.steps(); ++k) {
        s1.advance(a, noise, k);
        s2.advance(b, noise, k);
        if (a.divergent || b.divergent) break;
        sup = std::max(sup, (a.x - b.x).norm());
      }
      terms[i] = grid.weights[i] * sup;
    }
    per_path[p] = pairwise_sum(terms);
  });
  return estimate(per_path);
}

void write_stability_csv(std::ostream& out, const std::vector<StabilityReport>& reports) {
  out << "n,m,delta,R,Psi,Phi,G_mass,rhs_budget\n";
  for (const auto& r : reports)
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.n, r.m, r.delta, r.R,
                       r.psi, r.phi, r.g_mass, r.rhs_budget);
}

}  // namespace flowjump
