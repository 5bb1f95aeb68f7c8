#include "flowjump/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <boost/numeric/odeint.hpp>

#include "flowjump/determinant.hpp"

namespace flowjump {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double InitialGrid::mass() const {
  return pairwise_sum(weights);
}

namespace {

template <class Visit>
void tensor_walk(int dim, int per_axis, Visit visit) {
  std::vector<int> idx(dim, 0);
  while (true) {
    visit(idx);
    int a = 0;
    while (a < dim && ++idx[a] == per_axis) idx[a++] = 0;
    if (a == dim) break;
  }
}

}  // namespace

InitialGrid mu_grid(int dim, int per_axis, double half_width) {
  if (dim < 1 || dim > kMaxDim || per_axis < 1 || !(half_width > 0.0))
    throw InvalidInput("mu_grid: bad arguments");
  const double theta_max = std::atan(half_width);
  const double dtheta = 2.0 * theta_max / per_axis;
  std::vector<double> xs(per_axis), ws(per_axis);
  for (int i = 0; i < per_axis; ++i) {
    const double th = -theta_max + (i + 0.5) * dtheta;
    xs[i] = std::tan(th);
    const double c = std::cos(th);
    ws[i] = dtheta / (c * c);
  }
  InitialGrid grid;
  grid.dim = dim;
  tensor_walk(dim, per_axis, [&](const std::vector<int>& idx) {
    Vec x(dim);
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      x[a] = xs[idx[a]];
      w *= ws[idx[a]];
    }
    grid.points.push_back(x);
    grid.weights.push_back(w * std::pow(1.0 + x.squaredNorm(), -dim));
  });
  return grid;
}

InitialGrid box_grid(int dim, int per_axis, double half_width) {
  if (dim < 1 || dim > kMaxDim || per_axis < 1 || !(half_width > 0.0))
    throw InvalidInput("box_grid: bad arguments");
  const double h = 2.0 * half_width / per_axis;
  InitialGrid grid;
  grid.dim = dim;
  tensor_walk(dim, per_axis, [&](const std::vector<int>& idx) {
    Vec x(dim);
    for (int a = 0; a < dim; ++a) x[a] = -half_width + (idx[a] + 0.5) * h;
    grid.points.push_back(x);
    grid.weights.push_back(std::pow(h, dim) * std::pow(1.0 + x.squaredNorm(), -dim));
  });
  return grid;
}

double mu_integral(const std::function<double(const Vec&)>& psi, int dim, int per_axis) {
  const InitialGrid grid = mu_grid(dim, per_axis, 1e4);
  std::vector<double> terms(grid.points.size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = grid.weights[i] * psi(grid.points[i]);
  return pairwise_sum(terms);
}

std::vector<ChangeOfVariablesResult> change_of_variables_check(
    const SdeModel& model, const InitialGrid& grid, const std::vector<double>& time_grid,
    std::uint64_t seed, std::size_t n_paths, const std::vector<NamedFunction>& tests) {
  const std::size_t nt = tests.size();
  // per path: one value per test function, NaN when the path is excluded
  std::vector<std::vector<double>> per_path(n_paths, std::vector<double>(nt, 0.0));
  SchemeOptions opt;
  opt.jacobian = true;
  FlowStepper stepper(model, opt);
  parallel_for(n_paths, [&](std::size_t p) {
    const NoisePath noise = sample_noise(time_grid, model.levy, seed, p);
    std::vector<double> acc(nt, 0.0);
    std::vector<std::vector<double>> terms(nt, std::vector<double>(grid.points.size(), 0.0));
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
      FlowState s = stepper.init(grid.points[i]);
      stepper.run(s, noise);
      const double det = s.divergent ? -1.0 : s.det_direct();
      if (det <= 0.0) {
        for (auto& v : per_path[p]) v = std::nan("");
        return;
      }
      const double ratio = backward_ratio(grid.points[i], s.x, det);
      for (std::size_t k = 0; k < nt; ++k) terms[k][i] = grid.weights[i] * tests[k].fn(s.x) * ratio;
    }
    for (std::size_t k = 0; k < nt; ++k) per_path[p][k] = pairwise_sum(terms[k]);
  });

  std::vector<ChangeOfVariablesResult> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<double> vals;
    std::size_t excluded = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      if (std::isnan(per_path[p][k])) ++excluded;
      else vals.push_back(per_path[p][k]);
    }
    const Estimate e = estimate(vals);
    auto& r = out[k];
    r.name = tests[k].name;
    r.flow_side = e.mean;
    r.standard_error = e.standard_error;
    r.flow_free_side = mu_integral(tests[k].fn, grid.dim);
    r.relative_error = std::abs(r.flow_side - r.flow_free_side) / std::abs(r.flow_free_side);
    r.excluded_paths = excluded;
  }
  return out;
}

MomentReport moment_diagnostics(const SdeModel& model, const InitialGrid& grid,
                                const std::vector<double>& time_grid, std::uint64_t seed,
                                std::size_t n_paths, double p) {
  if (!(p >= 1.0)) throw InvalidInput("moment_diagnostics: p must be >= 1");
  if (n_paths < 4) throw InvalidInput("moment_diagnostics: need at least 4 paths");
  MomentReport report;
  report.p = p;
  const int d = model.dim();
  report.beta = d >= 2 ? beta_alpha(d, model.field.regularity().alpha) : INFINITY;
  // With no jumps the determinant moment has no jump-size restriction.
  if (!model.levy.rate.is_zero() && p >= report.beta)
    throw GateViolation("determinant moment order p must be below beta_alpha", p, report.beta);

  SchemeOptions opt;
  opt.jacobian = true;
  FlowStepper stepper(model, opt);
  const double mass = grid.mass();
  struct PathValues {
    double det = 0.0, growth = 0.0, integral = 0.0;
    bool excluded = false;
  };
  std::vector<PathValues> values(n_paths);
  parallel_for(n_paths, [&](std::size_t path) {
    const NoisePath noise = sample_noise(time_grid, model.levy, seed, path);
    const std::size_t n = grid.points.size();
    std::vector<FlowState> states(n);
    std::vector<double> sup_det(n, 1.0), sup_growth(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) states[i] = stepper.init(grid.points[i]);
    double sup_integral = mass;  // t = 0: forward ratio is 1
    std::vector<double> terms(n);
    for (std::size_t step = 0; step < noise.steps(); ++step) {
      for (std::size_t i = 0; i < n; ++i) {
        FlowState& s = states[i];
        stepper.advance(s, noise, step);
        const double det = s.divergent ? -1.0 : s.det_direct();
        if (det <= 0.0) {
          values[path].excluded = true;
          return;
        }
        const Vec& x = grid.points[i];
        const double growth = std::pow((1.0 + s.x.squaredNorm()) / (1.0 + x.squaredNorm()), p);
        const double det_p = std::pow(det, -p);
        sup_det[i] = std::max(sup_det[i], det_p);
        sup_growth[i] = std::max(sup_growth[i], growth);
        terms[i] = grid.weights[i] * std::pow(growth, d) * det_p;
      }
      sup_integral = std::max(sup_integral, pairwise_sum(terms));
    }
    for (std::size_t i = 0; i < n; ++i) {
      sup_det[i] *= grid.weights[i];
      sup_growth[i] *= grid.weights[i];
    }
    values[path].det = pairwise_sum(sup_det) / mass;
    values[path].growth = pairwise_sum(sup_growth) / mass;
    values[path].integral = sup_integral;
  });

  auto collect = [&](std::size_t count, auto member) {
    std::vector<double> v;
    for (std::size_t i = 0; i < count; ++i)
      if (!values[i].excluded) v.push_back(values[i].*member);
    return estimate(v);
  };
  for (const auto& v : values) report.excluded_paths += v.excluded ? 1 : 0;
  const std::size_t half = n_paths / 2;
  report.det_moment = collect(n_paths, &PathValues::det);
  report.growth_moment = collect(n_paths, &PathValues::growth);
  report.jacobian_integral = collect(n_paths, &PathValues::integral);
  report.det_moment_half = collect(half, &PathValues::det);
  report.growth_moment_half = collect(half, &PathValues::growth);
  report.jacobian_integral_half = collect(half, &PathValues::integral);
  auto close = [](const Estimate& a, const Estimate& b) {
    const double pooled = std::sqrt(a.standard_error * a.standard_error + b.standard_error * b.standard_error);
    return std::isfinite(a.mean) && std::abs(a.mean - b.mean) <= 2.0 * pooled + 1e-12 * std::abs(a.mean);
  };
  report.stable = close(report.det_moment, report.det_moment_half) &&
                  close(report.growth_moment, report.growth_moment_half) &&
                  close(report.jacobian_integral, report.jacobian_integral_half);
  return report;
}

LiouvilleOracle liouville_oracle(const DriftTerm& drift, const Vec& x0, double t0, double t1) {
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  const int d = drift.dim();
  State y(d + 1);
  for (int i = 0; i < d; ++i) y[i] = x0[i];
  y[d] = 0.0;
  auto rhs = [&](const State& s, State& ds, double t) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = s[i];
    const Vec b = drift.value(t, x);
    for (int i = 0; i < d; ++i) ds[i] = b[i];
    ds[d] = drift.divergence(t, x);
  };
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
  ode::integrate_adaptive(stepper, rhs, y, t0, t1, (t1 - t0) * 1e-3);
  LiouvilleOracle out;
  out.x = Vec(d);
  for (int i = 0; i < d; ++i) out.x[i] = y[i];
  out.det = std::exp(y[d]);
  return out;
}

}  // namespace flowjump
