#include "flowjump/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "flowjump/acceptance.hpp"
#include "flowjump/determinant.hpp"
#include "flowjump/ensemble.hpp"
#include "flowjump/fp_diagnostics.hpp"
#include "flowjump/mollify.hpp"
#include "flowjump/rough_flow.hpp"

namespace flowjump {

namespace {

namespace fs = std::filesystem;

class Outputs {
 public:
  Outputs(fs::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + (dir_ / name).string());
    manifest_.artifacts.push_back(name);
    return out;
  }

 private:
  fs::path dir_;
  RunManifest& manifest_;
};

CheckResult check(std::string id, std::string name, double measured, double tolerance, bool pass,
                  std::string detail = {}) {
  CheckResult c;
  c.id = std::move(id);
  c.name = std::move(name);
  c.measured = measured;
  c.tolerance = tolerance;
  c.pass = pass;
  c.detail = std::move(detail);
  return c;
}

std::vector<double> time_grid(double dt) {
  return uniform_grid(0.0, 1.0, static_cast<std::size_t>(std::lround(1.0 / dt)));
}

Vec default_point(int d) {
  Vec x(d);
  for (int a = 0; a < d; ++a) x[a] = a % 2 == 0 ? 0.4 : -0.7;
  return x;
}

void run_det_calculus(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  m.checks.push_back(criterion_determinant_identities(cfg.seed, cfg.smoke));
  m.checks.push_back(criterion_beta_gate(cfg.seed, cfg.smoke));
  auto csv = out.open("beta_alpha.csv");
  csv << "d,alpha,remainder_bound,beta_alpha,rule_of_thumb_ok\n";
  for (int d = 2; d <= 4; ++d)
    for (int k = 1; k <= 50; ++k) {
      const double alpha = k / 51.0;
      const auto gates = evaluate_gates(d, alpha, 2.0);
      csv << fmt::format("{},{:.17g},{:.17g},{:.17g},{}\n", d, alpha, remainder_bound(d, alpha), beta_alpha(d, alpha),
                         gates.rule_of_thumb_ok ? 1 : 0);
    }
}

void run_noise_identity(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  const int d = cfg.field.dim;
  LevyMeasureSpec levy = cfg.levy.build(d);
  if (levy.rate.is_zero()) throw InvalidInput("noise_identity needs a positive levy rate");
  const double L = cfg.field.param("L", 0.5);
  const auto res = exponential_moment_check([L](const Vec&) { return L; }, std::abs(L), levy, 1.0, cfg.paths, cfg.seed);
  const double z = std::abs(res.mc_estimate - res.closed_form) / res.standard_error;
  m.checks.push_back(check("noise", "exponential moment within 3 SE", z, 3.0, z <= 3.0,
                           fmt::format("MC {:.6f} vs closed form {:.6f}", res.mc_estimate, res.closed_form)));
  {
    auto csv = out.open("exp_moment.csv");
    csv << "L,paths,mc_estimate,standard_error,closed_form\n";
    csv << fmt::format("{:.17g},{},{:.17g},{:.17g},{:.17g}\n", L, res.paths, res.mc_estimate, res.standard_error,
                       res.closed_form);
  }
  auto noise_csv = out.open("noise_path.csv");
  write_noise_csv(noise_csv, sample_noise(time_grid(cfg.dt), levy, cfg.seed, 0));
}

void run_mollify_convergence(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  const CoefficientField field = make_field(cfg.field);
  const double q = cfg.field.sobolev_q;
  auto csv = out.open("mollify_convergence.csv");
  csv << "n,drift_lq_distance,diffusion_l2q_distance\n";
  std::vector<double> drift_gaps;
  for (int n : cfg.levels) {
    const CoefficientField mol = mollify(field, n);
    const double db = drift_lq_distance(mol.drift_term(), field.drift_term(), q, cfg.R);
    const double ds = diffusion_lq_distance(mol.diffusion_term(), field.diffusion_term(), 2.0 * q, cfg.R);
    drift_gaps.push_back(db);
    csv << fmt::format("{},{:.17g},{:.17g}\n", n, db, ds);
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < drift_gaps.size(); ++k) decreasing = decreasing && drift_gaps[k] < drift_gaps[k - 1];
  m.checks.push_back(check("mollify", "drift L^q distance decreasing along the ladder", drift_gaps.back(),
                           drift_gaps.front(), decreasing));
}

void run_flow_oracle(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  const CoefficientField field = make_field(cfg.field);
  const int d = cfg.field.dim;
  FieldSpec drift_only = cfg.field;
  drift_only.diffusion = "zero";
  drift_only.jump = "zero";
  const SdeModel model{make_field(drift_only), LevyMeasureSpec::none(d)};
  if (cfg.field.diffusion != "zero" || cfg.field.jump != "zero" || cfg.levy.rate != 0.0)
    m.notes.emplace_back("flow_oracle", "diffusion and jumps dropped; the Liouville oracle is deterministic");
  const Vec x0 = default_point(d);
  const auto oracle = liouville_oracle(model.field.drift_term(), x0, 0.0, 1.0);
  auto csv = out.open("liouville.csv");
  csv << "dt,det_explicit,det_direct,oracle,relative_error\n";
  std::vector<double> errors;
  for (double factor : {4.0, 2.0, 1.0}) {
    const double dt = cfg.dt * factor;
    const auto traj = determinant_decomposition(model, sample_noise(time_grid(dt), model.levy, cfg.seed, 0), x0);
    const double ex = traj.decomposition.det_explicit.back();
    errors.push_back(std::abs(ex - oracle.det) / std::abs(oracle.det));
    csv << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", dt, ex, traj.decomposition.det_direct.back(),
                       oracle.det, errors.back());
  }
  const bool trend = errors[1] < errors[0] && errors[2] < errors[1];
  m.checks.push_back(check("liouville", "error decreases as dt halves", errors[2], errors[0], trend));
}

void run_det_decomposition(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  const SdeModel model{make_field(cfg.field), cfg.levy.build(cfg.field.dim)};
  const auto grid = time_grid(cfg.dt);
  const int d = model.dim();
  auto summary = out.open("det_decomposition.csv");
  summary << "path,worst_relative_gap,max_abs_dM,dM_violations\n";
  double worst = 0.0;
  std::size_t violations = 0;
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    const auto traj = determinant_decomposition(model, sample_noise(grid, model.levy, cfg.seed, p), default_point(d));
    if (p == 0) {
      auto csv = out.open("trajectory_0.csv");
      write_trajectory_csv(csv, traj);
    }
    const auto& dec = traj.decomposition;
    double w = 0.0;
    for (std::size_t k = 0; k < dec.det_direct.size(); ++k)
      w = std::max(w, std::abs(dec.det_explicit[k] - dec.det_direct[k]) / std::abs(dec.det_direct[k]));
    worst = std::max(worst, w);
    violations += traj.dM_bound_violations;
    summary << fmt::format("{},{:.17g},{:.17g},{}\n", p, w, traj.max_abs_dM, traj.dM_bound_violations);
  }
  m.checks.push_back(check("decomposition", "explicit vs direct determinant", worst, 1e-2, worst <= 1e-2));
  m.checks.push_back(check("jump_gate", "|dM| <= 1/beta_alpha", static_cast<double>(violations), 0.0, violations == 0));
  const auto mom = moment_diagnostics(model, mu_grid(d, std::min(cfg.grid, 16)), grid, cfg.seed + 1,
                                      std::max<std::size_t>(4, std::min<std::size_t>(cfg.paths, 64)), cfg.p);
  double worst_z = 0.0;
  for (const auto& [full, half] : {std::pair{mom.det_moment, mom.det_moment_half},
                                   std::pair{mom.growth_moment, mom.growth_moment_half},
                                   std::pair{mom.jacobian_integral, mom.jacobian_integral_half}}) {
    const double pooled = std::hypot(full.standard_error, half.standard_error);
    if (pooled > 0.0) worst_z = std::max(worst_z, std::abs(full.mean - half.mean) / pooled);
  }
  m.checks.push_back(check("moments", "moments agree between half and full ensemble (pooled SE)", worst_z, 2.0,
                           mom.stable,
                           fmt::format("p = {}, beta = {:.4g}, det moment {:.4g} (half {:.4g})", cfg.p, mom.beta,
                                       mom.det_moment.mean, mom.det_moment_half.mean)));
  m.notes.emplace_back("moment_excluded_paths", std::to_string(mom.excluded_paths));
}

void run_rough_cauchy(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  const SdeModel model{make_field(cfg.field), cfg.levy.build(cfg.field.dim)};
  const auto seq =
      FlowSequence::build(model, cfg.levels, mu_grid(cfg.field.dim, cfg.grid), time_grid(cfg.dt), cfg.seed, cfg.paths);
  m.notes.emplace_back("divergent_paths", std::to_string(seq.divergent_paths()));
  const auto table = cauchy_diagnostic(seq, 0.05);
  {
    auto csv = out.open("cauchy.csv");
    csv << "n,m,phi,phi_se\n";
    for (const auto& r : table.rows) csv << fmt::format("{},{},{:.17g},{:.17g}\n", r.n, r.m, r.phi, r.phi_se);
  }
  std::vector<StabilityReport> reports;
  std::size_t violations = 0;
  for (std::size_t k = 0; k + 1 < cfg.levels.size(); ++k) {
    for (double delta : cfg.deltas)
      reports.push_back(stability_functional(seq, cfg.levels[k], cfg.levels[k + 1], delta, cfg.R));
    violations += psi_delta_violations(seq, cfg.levels[k], cfg.levels[k + 1], cfg.deltas, cfg.R);
  }
  auto csv = out.open("stability.csv");
  write_stability_csv(csv, reports);
  m.checks.push_back(check("cauchy", "Phi strictly decreasing along the ladder", table.rows.back().phi,
                           table.rows.front().phi, table.strictly_decreasing));
  m.checks.push_back(check("psi_monotone", "Psi nonincreasing in delta per path", static_cast<double>(violations), 0.0,
                           violations == 0));
}

/// Closed-form density at time t when the spec is Brownian or OU with a Gaussian start.
std::function<double(const Vec&)> gaussian_reference(const ExperimentConfig& cfg, double t) {
  if (cfg.levy.rate != 0.0 || cfg.field.diffusion != "constant") return {};
  const double s2 = std::pow(cfg.field.param("sigma", 1.0), 2);
  double var = 0.0;
  if (cfg.field.drift == "zero") {
    var = 1.0 + s2 * t;
  } else if (cfg.field.drift == "linear" && cfg.field.params.count("a")) {
    const double a = cfg.field.params.at("a");
    var = a == 0.0 ? 1.0 + s2 * t : std::exp(2 * a * t) + s2 * std::expm1(2 * a * t) / (2 * a);
  } else {
    return {};
  }
  const int d = cfg.field.dim;
  return [var, d](const Vec& x) {
    return std::pow(2.0 * std::numbers::pi * var, -0.5 * d) * std::exp(-x.squaredNorm() / (2.0 * var));
  };
}

void run_pide_reference(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  const int d = cfg.field.dim;
  if (d > 3) throw InvalidInput("pide_reference supports d <= 3");
  const GeneratorSpec spec{make_field(cfg.field), cfg.levy.build(d), TruncationConvention::Tempered};
  const auto init = InitialDensity::gaussian(Vec::Zero(d), 1.0);
  PideScheme scheme;
  scheme.time_grid = time_grid(cfg.dt);
  for (int k = 0; k <= 10; ++k) scheme.observation_times.push_back(k / 10.0);
  const auto sol = solve_pide_particle(spec, init, cfg.particles, scheme, cfg.seed);
  m.notes.emplace_back("divergent_particles", std::to_string(sol.divergent()));
  const std::size_t last = sol.times().size() - 1;
  const auto u = sol.density(last);
  const DensityGrid grid{d, 6.0, d <= 2 ? 64 : 24};
  const auto values = evaluate_on_grid(u, grid);
  const auto reference = gaussian_reference(cfg, 1.0);
  {
    auto csv = out.open("density_t1.csv");
    write_density_csv(csv, grid, values, reference);
  }
  const double mass = u.box_mass(Vec::Constant(d, -30.0), Vec::Constant(d, 30.0));
  m.checks.push_back(check("mass", "kernel density mass", std::abs(mass - 1.0), 1e-6, std::abs(mass - 1.0) <= 1e-6));
  if (reference) {
    const double l1 = l1_distance(values, grid, reference);
    const double tol = 0.03 * std::sqrt(std::max(1.0, 1e5 / static_cast<double>(cfg.particles)));
    m.checks.push_back(check("l1", "L1 distance to the closed-form density at t = 1", l1, tol, l1 <= tol));
  }
  const std::vector<std::shared_ptr<const TestFunction>> family{TestFunction::smoothed_square(d, 10.0),
                                                                TestFunction::gaussian(Vec::Zero(d), 1.0)};
  const auto rows = weak_residual(sol, spec, family);
  {
    auto csv = out.open("weak_residual.csv");
    write_residual_csv(csv, rows);
  }
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(r.residual) / r.standard_error);
  m.checks.push_back(check("weak_residual", "weak-form residual within 3 SE", worst, 3.0, worst <= 3.0));
  const double q_star = cfg.field.sobolev_q / (cfg.field.sobolev_q - 1.0);
  const auto cls = class_membership(sol, q_star, grid);
  m.checks.push_back(check("class", "weighted L^q* statistic finite and stable under doubling", cls.relative_change,
                           kClassStabilityTolerance, cls.stable,
                           fmt::format("sup {:.6g} (half ensemble {:.6g})", cls.sup_full, cls.sup_half)));
}

void run_uniqueness_coupling(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  const int d = cfg.field.dim;
  const GeneratorSpec spec{make_field(cfg.field), cfg.levy.build(d), TruncationConvention::Tempered};
  CouplingOptions options;
  options.particles = cfg.paths;
  options.fine_steps = static_cast<std::size_t>(std::lround(1.0 / cfg.dt));
  options.R = cfg.R;
  const auto rep = pathwise_uniqueness_diagnostic(spec, InitialDensity::gaussian(Vec::Zero(d), 1.0), cfg.deltas,
                                                  cfg.seed, options);
  auto csv = out.open("coupling.csv");
  write_coupling_csv(csv, rep);
  m.notes.emplace_back("excluded_paths", std::to_string(rep.excluded));
  m.notes.emplace_back("stopped_fraction", fmt::format("{:.6g}", rep.stopped_fraction));
  m.checks.push_back(check("budget", "functional below the delta-independent budget",
                           rep.rows.empty() ? 0.0 : rep.rows.back().functional.mean, rep.budget, rep.bounded));
  m.checks.push_back(check("delta_ratio", "max/min functional across delta", rep.ratio, 2.0, rep.ratio <= 2.0));
}

void run_acceptance_all(const ExperimentConfig& cfg, RunManifest& m, Outputs& out) {
  AcceptanceOptions options;
  options.seed = cfg.seed;
  options.smoke = cfg.smoke;
  m.checks = run_acceptance(options);
  auto csv = out.open("acceptance.csv");
  csv << "id,name,measured,tolerance,pass\n";
  for (const auto& c : m.checks)
    csv << fmt::format("{},{},{:.17g},{:.17g},{}\n", c.id, c.name, c.measured, c.tolerance, c.pass ? 1 : 0);
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config, const fs::path& output_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.kind = to_string(config.kind);
  manifest.config_sha256 = sha256_hex(config.source_text);
  manifest.version = version();
  manifest.seed = config.seed;
  fs::create_directories(output_dir);
  {
    std::ofstream echo(output_dir / "config.ini", std::ios::binary);
    echo << config.source_text;
  }
  Outputs outputs(output_dir, manifest);
  bool valid = true;
  try {
    config.validate();
  } catch (const GateViolation& e) {
    valid = false;
    manifest.checks.push_back(check("validation", "config gates", e.value(), e.threshold(), false, e.what()));
  } catch (const std::exception& e) {
    valid = false;
    manifest.checks.push_back(check("validation", "config gates", NAN, NAN, false, e.what()));
  }
  if (valid) {
    try {
      switch (config.kind) {
        case ExperimentKind::DetCalculus: run_det_calculus(config, manifest, outputs); break;
        case ExperimentKind::NoiseIdentity: run_noise_identity(config, manifest, outputs); break;
        case ExperimentKind::MollifyConvergence: run_mollify_convergence(config, manifest, outputs); break;
        case ExperimentKind::FlowOracle: run_flow_oracle(config, manifest, outputs); break;
        case ExperimentKind::DetDecomposition: run_det_decomposition(config, manifest, outputs); break;
        case ExperimentKind::RoughCauchy: run_rough_cauchy(config, manifest, outputs); break;
        case ExperimentKind::PideReference: run_pide_reference(config, manifest, outputs); break;
        case ExperimentKind::UniquenessCoupling: run_uniqueness_coupling(config, manifest, outputs); break;
        case ExperimentKind::AcceptanceAll: run_acceptance_all(config, manifest, outputs); break;
      }
    } catch (const std::exception& e) {
      manifest.checks.push_back(check("runtime", "experiment completed", NAN, NAN, false, e.what()));
    }
  }
  manifest.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream mf(output_dir / "manifest.txt", std::ios::binary);
  manifest.write(mf);
  return manifest;
}

}  // namespace flowjump
