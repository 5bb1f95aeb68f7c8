#include "flowjump/particles.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "flowjump/ensemble.hpp"

namespace flowjump {

namespace {

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / boost::math::tgamma(0.5 * d);
}

double ball_volume(int d, double radius) {
  return sphere_area(d) / d * std::pow(radius, d);
}

/// integral over R^d of g dx on a tan-mapped tensor grid.
double whole_space_integral(const std::function<double(const Vec&)>& g, int dim) {
  static constexpr int kPerAxis[] = {0, 4096, 400, 64, 24};
  const InitialGrid grid = mu_grid(dim, kPerAxis[dim], 1e3);
  std::vector<double> terms(grid.points.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Vec& x = grid.points[i];
    terms[i] = grid.weights[i] * std::pow(1.0 + x.squaredNorm(), dim) * g(x);
  }
  return pairwise_sum(terms);
}

Vec standard_normal(RandomStream& rng, int d) {
  Vec z(d);
  for (int a = 0; a < d; ++a) z[a] = rng.normal();
  return z;
}

void check_declared_r(double r) {
  if (!(r > 1.0)) throw InvalidInput("InitialDensity: declared r must exceed 1");
}

}  // namespace

InitialDensity InitialDensity::gaussian(Vec mean, double sd, double r) {
  const int d = static_cast<int>(mean.size());
  if (d < 1 || d > kMaxDim || !(sd > 0.0)) throw InvalidInput("InitialDensity::gaussian: bad arguments");
  check_declared_r(r);
  InitialDensity out;
  out.dim_ = d;
  out.name_ = fmt::format("gaussian(sd={})", sd);
  out.r_ = r;
  const double norm = std::pow(2.0 * std::numbers::pi * sd * sd, -0.5 * d);
  out.density_ = [mean, sd, norm](const Vec& x) {
    return norm * std::exp(-(x - mean).squaredNorm() / (2.0 * sd * sd));
  };
  out.sampler_ = [mean, sd, d](RandomStream& rng) -> Vec { return mean + sd * standard_normal(rng, d); };
  const auto density = out.density_;
  out.certificate_ = whole_space_integral(
      [&](const Vec& x) { return std::pow(density(x), r) * std::pow(1.0 + x.squaredNorm(), (r - 1.0) * d); }, d);
  return out;
}

InitialDensity InitialDensity::uniform_ball(int dim, double radius, double r) {
  if (dim < 1 || dim > kMaxDim || !(radius > 0.0)) throw InvalidInput("InitialDensity::uniform_ball: bad arguments");
  check_declared_r(r);
  InitialDensity out;
  out.dim_ = dim;
  out.name_ = fmt::format("uniform_ball(R={})", radius);
  out.r_ = r;
  const double value = 1.0 / ball_volume(dim, radius);
  out.density_ = [value, radius](const Vec& x) { return x.norm() <= radius ? value : 0.0; };
  out.sampler_ = [dim, radius](RandomStream& rng) -> Vec {
    const Vec z = standard_normal(rng, dim);
    return radius * std::pow(rng.uniform(), 1.0 / dim) / z.norm() * z;
  };
  const double radial = boost::math::quadrature::gauss<double, 30>::integrate(
      [&](double s) { return std::pow(1.0 + s * s, (r - 1.0) * dim) * std::pow(s, dim - 1); }, 0.0, radius);
  out.certificate_ = std::pow(value, r) * sphere_area(dim) * radial;
  return out;
}

DensityEstimate::DensityEstimate(std::vector<Vec> particles, double bandwidth, double time)
    : particles_(std::move(particles)), h_(bandwidth), t_(time) {
  if (particles_.empty()) throw InvalidInput("DensityEstimate: no particles");
  if (!(h_ > 0.0)) throw InvalidInput("DensityEstimate: bandwidth must be positive");
  dim_ = static_cast<int>(particles_.front().size());
  norm_ = std::pow(2.0 * std::numbers::pi * h_ * h_, -0.5 * dim_) / static_cast<double>(particles_.size());
}

double DensityEstimate::operator()(const Vec& x) const {
  const double cut2 = kKdeCutoff * kKdeCutoff * h_ * h_;
  const double inv = 1.0 / (2.0 * h_ * h_);
  double sum = 0.0;
  for (const Vec& p : particles_) {
    const double r2 = (x - p).squaredNorm();
    if (r2 < cut2) sum += std::exp(-r2 * inv);
  }
  return norm_ * sum;
}

double DensityEstimate::box_mass(const Vec& lower, const Vec& upper) const {
  const double s = 1.0 / (std::numbers::sqrt2 * h_);
  std::vector<double> terms(particles_.size());
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    double m = 1.0;
    for (int a = 0; a < dim_; ++a)
      m *= 0.5 * (std::erf((upper[a] - particles_[i][a]) * s) - std::erf((lower[a] - particles_[i][a]) * s));
    terms[i] = m;
  }
  return pairwise_sum(terms) / static_cast<double>(particles_.size());
}

double default_bandwidth(std::size_t n, int dim) {
  return kKdeBandwidthConstant * std::pow(static_cast<double>(n), -1.0 / (dim + 4));
}

double DensityGrid::cell_volume() const {
  return std::pow(step(), dim);
}

std::vector<Vec> DensityGrid::nodes() const {
  std::vector<Vec> out;
  const double h = step();
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec x(dim);
    for (int a = 0; a < dim; ++a) x[a] = -half_width + (idx[a] + 0.5) * h;
    out.push_back(x);
    int a = 0;
    while (a < dim && ++idx[a] == per_axis) idx[a++] = 0;
    if (a == dim) break;
  }
  return out;
}

std::vector<double> evaluate_on_grid(const DensityEstimate& u, const DensityGrid& grid) {
  const std::vector<Vec> nodes = grid.nodes();
  std::vector<double> values(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t i) { values[i] = u(nodes[i]); });
  return values;
}

double l1_distance(const std::vector<double>& values, const DensityGrid& grid,
                   const std::function<double(const Vec&)>& reference) {
  const std::vector<Vec> nodes = grid.nodes();
  if (nodes.size() != values.size()) throw InvalidInput("l1_distance: value count does not match grid");
  std::vector<double> terms(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) terms[i] = std::abs(values[i] - reference(nodes[i]));
  return pairwise_sum(terms) * grid.cell_volume();
}

std::pair<SdeModel, SchemeOptions> pide_model(const GeneratorSpec& spec, double delta) {
  SchemeOptions opt;
  opt.enforce_jump_gate = false;
  if (spec.convention == TruncationConvention::Tempered && !spec.levy.rate.is_zero()) {
    opt.compensator = CompensatorMode::SmallJumps;
    opt.small_jump_radius = delta;
    SdeModel model{spec.field.with_drift(drift_conversion(spec, delta), spec.field.name()), spec.levy};
    return {std::move(model), opt};
  }
  opt.compensator = CompensatorMode::Full;
  return {SdeModel{spec.field, spec.levy}, opt};
}

Vec PideSolution::initial(std::size_t i) const {
  Vec x(dim_);
  for (int a = 0; a < dim_; ++a) x[a] = initial_.at(i * dim_ + a);
  return x;
}

Vec PideSolution::position(std::size_t obs, std::size_t i) const {
  Vec x(dim_);
  const std::size_t base = (obs * n_ + i) * dim_;
  for (int a = 0; a < dim_; ++a) x[a] = positions_.at(base + a);
  return x;
}

std::vector<Vec> PideSolution::positions(std::size_t obs, std::size_t limit) const {
  std::vector<Vec> out;
  const std::size_t n = std::min(limit, n_);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!excluded_[i]) out.push_back(position(obs, i));
  return out;
}

DensityEstimate PideSolution::density(std::size_t obs, double bandwidth, std::size_t limit) const {
  std::vector<Vec> pts = positions(obs, limit);
  const double h = bandwidth > 0.0 ? bandwidth : default_bandwidth(pts.size(), dim_);
  return DensityEstimate(std::move(pts), h, times_.at(obs));
}

Estimate PideSolution::average(std::size_t obs, const std::function<double(const Vec&)>& g) const {
  std::vector<double> v;
  v.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i)
    if (!excluded_[i]) v.push_back(g(position(obs, i)));
  return estimate(v);
}

PideSolution solve_pide_particle(const GeneratorSpec& spec, const InitialDensity& init, std::size_t n,
                                 const PideScheme& scheme, std::uint64_t seed) {
  const int d = spec.dim();
  if (n < 1000) throw InvalidInput("solve_pide_particle: need at least 1000 particles");
  if (init.dim() != d) throw InvalidInput("solve_pide_particle: initial density dimension mismatch");
  const double q = spec.field.regularity().sobolev_q;
  if (!(q > 1.0)) throw GateViolation("solve_pide_particle: Sobolev exponent q must exceed 1", q, 1.0);
  const double q_star = q / (q - 1.0);
  if (!(init.declared_r() > q_star))
    throw GateViolation("solve_pide_particle: declared r must exceed q* = q/(q-1)", init.declared_r(), q_star);
  if (!std::isfinite(init.certificate()))
    throw GateViolation("solve_pide_particle: initial weighted-norm certificate is not finite", init.certificate(), 0.0);
  if (!spec.levy.rate.is_zero()) spec.levy.require_certificate(kPideMomentOrder);
  validate_grid(scheme.time_grid);
  if (scheme.observation_times.empty()) throw InvalidInput("solve_pide_particle: no observation times");

  // Map each observation time to its base-grid index.
  std::vector<std::size_t> obs_index;
  for (double t : scheme.observation_times) {
    std::size_t k = 0;
    while (k < scheme.time_grid.size() && std::abs(scheme.time_grid[k] - t) > 1e-12) ++k;
    if (k == scheme.time_grid.size())
      throw InvalidInput(fmt::format("solve_pide_particle: observation time {} is not on the base grid", t));
    if (!obs_index.empty() && k <= obs_index.back())
      throw InvalidInput("solve_pide_particle: observation times must be increasing");
    obs_index.push_back(k);
  }

  const auto [model, options] = pide_model(spec, scheme.delta);
  model.validate();
  const FlowStepper stepper(model, options);

  PideSolution sol;
  sol.dim_ = d;
  sol.n_ = n;
  sol.times_ = scheme.observation_times;
  const std::size_t n_obs = obs_index.size();
  sol.initial_.assign(n * d, 0.0);
  sol.positions_.assign(n_obs * n * d, 0.0);
  sol.jumps_.assign(n_obs * n, 0);
  sol.excluded_.assign(n, 0);

  parallel_for(n, [&](std::size_t i) {
    RandomStream rng(seed, i, Channel::Initial);
    const Vec x0 = init.sample(rng);
    for (int a = 0; a < d; ++a) sol.initial_[i * d + a] = x0[a];
    const NoisePath noise = sample_noise(scheme.time_grid, model.levy, seed, i);
    FlowState s = stepper.init(x0);
    std::size_t base_k = 0;  // index of the current point in the base grid
    std::size_t next_obs = 0;
    int jumps = 0;
    auto record = [&] {
      while (next_obs < n_obs && obs_index[next_obs] == base_k) {
        const std::size_t slot = (next_obs * n + i) * d;
        for (int a = 0; a < d; ++a) sol.positions_[slot + a] = s.x[a];
        sol.jumps_[next_obs * n + i] = jumps;
        ++next_obs;
      }
    };
    record();
    for (std::size_t step = 0; step < noise.steps(); ++step) {
      stepper.advance(s, noise, step);
      if (noise.jump_at[step + 1] >= 0) ++jumps;
      if (s.divergent || !s.x.allFinite()) {
        sol.excluded_[i] = 1;
        return;
      }
      if (noise.on_base_grid[step + 1]) {
        ++base_k;
        record();
      }
    }
  });
  for (char e : sol.excluded_) sol.divergent_ += e ? 1 : 0;
  return sol;
}

void write_density_csv(std::ostream& out, const DensityGrid& grid, const std::vector<double>& values,
                       const std::function<double(const Vec&)>& reference) {
  for (int a = 0; a < grid.dim; ++a) out << 'x' << a + 1 << ',';
  out << "u";
  if (reference) out << ",reference";
  out << '\n';
  const std::vector<Vec> nodes = grid.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int a = 0; a < grid.dim; ++a) out << fmt::format("{:.17g},", nodes[i][a]);
    out << fmt::format("{:.17g}", values.at(i));
    if (reference) out << fmt::format(",{:.17g}", reference(nodes[i]));
    out << '\n';
  }
}

}  // namespace flowjump
