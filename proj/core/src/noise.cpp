#include "flowjump/noise.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "flowjump/quadrature.hpp"
#include "flowjump/stats.hpp"

namespace flowjump {

// ---------------------------------------------------------------------------
// stats helpers

double pairwise_sum(std::span<const double> values) noexcept {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Estimate estimate(std::span<const double> values) {
  Estimate e;
  e.samples = values.size();
  if (values.empty()) return e;
  const double n = static_cast<double>(values.size());
  e.mean = pairwise_sum(values) / n;
  if (values.size() > 1) {
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double c = values[i] - e.mean;
      sq[i] = c * c;
    }
    e.standard_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return e;
}

// ---------------------------------------------------------------------------
// MarkLaw

namespace {

constexpr int kRadialNodes = 8;
constexpr int kPolarNodes = 8;
constexpr int kAzimuthNodes = 16;

// Product rule on the unit sphere S^{dim-1} with weights summing to one.
std::vector<MarkNode> sphere_nodes(int dim) {
  std::vector<MarkNode> out;
  if (dim == 1) {
    Vec p(1);
    p(0) = 1.0;
    out.push_back({p, 0.5});
    p(0) = -1.0;
    out.push_back({p, 0.5});
    return out;
  }
  if (dim == 2) {
    for (int j = 0; j < kAzimuthNodes; ++j) {
      const double phi = 2.0 * std::numbers::pi * (j + 0.5) / kAzimuthNodes;
      Vec p(2);
      p << std::cos(phi), std::sin(phi);
      out.push_back({p, 1.0 / kAzimuthNodes});
    }
    return out;
  }
  // S^{m}: polar angle theta with density sin^{m-1}(theta), then S^{m-1}.
  const int m = dim - 1;
  const auto rule = gauss_legendre(kPolarNodes, 0.0, std::numbers::pi);
  const auto sub = sphere_nodes(dim - 1);
  double total = 0.0;
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    const double theta = rule.nodes[a];
    const double w = rule.weights[a] * std::pow(std::sin(theta), m - 1);
    for (const auto& s : sub) {
      Vec p(dim);
      p(0) = std::cos(theta);
      p.tail(dim - 1) = std::sin(theta) * s.point;
      out.push_back({p, w * s.weight});
      total += w * s.weight;
    }
  }
  for (auto& node : out) node.weight /= total;
  return out;
}

}  // namespace

MarkLaw MarkLaw::fixed(Vec y0) {
  if (y0.size() < 1 || y0.size() > kMaxDim) throw InvalidInput("MarkLaw: bad mark dimension");
  if (!y0.allFinite()) throw InvalidInput("MarkLaw: non-finite mark");
  if (y0.squaredNorm() == 0.0) throw InvalidInput("MarkLaw: marks live on R^d \\ {0}");
  MarkLaw law(Kind::Fixed, static_cast<int>(y0.size()));
  law.atom_ = y0;
  law.nodes_.push_back({y0, 1.0});
  return law;
}

MarkLaw MarkLaw::symmetric(Vec y0) {
  MarkLaw law = fixed(std::move(y0));
  law.kind_ = Kind::Symmetric;
  law.nodes_.clear();
  law.nodes_.push_back({law.atom_, 0.5});
  law.nodes_.push_back({-law.atom_, 0.5});
  return law;
}

MarkLaw MarkLaw::radial_shell(int dim, double r_min, double r_max, double kappa) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("MarkLaw: bad mark dimension");
  if (!(r_min > 0.0))
    throw InvalidInput("MarkLaw: radial law must be truncated away from 0 (infinite activity)");
  if (!(r_max > r_min) || !std::isfinite(r_max))
    throw InvalidInput("MarkLaw: need 0 < r_min < r_max < inf");
  MarkLaw law(Kind::RadialShell, dim);
  law.r_min_ = r_min;
  law.r_max_ = r_max;
  law.kappa_ = kappa;
  law.build_radial_nodes();
  return law;
}

void MarkLaw::build_radial_nodes() {
  // Radius density proportional to r^{-1-kappa}; in s = log r it is e^{-kappa s}.
  const auto rule = gauss_legendre(kRadialNodes, std::log(r_min_), std::log(r_max_));
  const auto dirs = sphere_nodes(dim_);
  double total = 0.0;
  std::vector<double> rw(rule.nodes.size());
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    rw[a] = rule.weights[a] * std::exp(-kappa_ * rule.nodes[a]);
    total += rw[a];
  }
  nodes_.clear();
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    const double r = std::exp(rule.nodes[a]);
    for (const auto& d : dirs) nodes_.push_back({r * d.point, rw[a] / total * d.weight});
  }
}

std::string MarkLaw::id() const {
  auto vec = [](const Vec& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt::format("{}", v(i));
    return s;
  };
  switch (kind_) {
    case Kind::Fixed: return "fixed(" + vec(atom_) + ")";
    case Kind::Symmetric: return "symmetric(" + vec(atom_) + ")";
    case Kind::RadialShell:
      return fmt::format("radial_shell(d={},r_min={},r_max={},kappa={})", dim_, r_min_, r_max_,
                         kappa_);
  }
  return "unknown";
}

Vec MarkLaw::sample(RandomStream& rng) const {
  switch (kind_) {
    case Kind::Fixed: return atom_;
    case Kind::Symmetric: return rng.uniform() < 0.5 ? Vec(atom_) : Vec(-atom_);
    case Kind::RadialShell: {
      const double u = rng.uniform();
      double r;
      if (std::abs(kappa_) < 1e-12) {
        r = r_min_ * std::pow(r_max_ / r_min_, u);
      } else {
        const double a = std::pow(r_min_, -kappa_);
        const double b = std::pow(r_max_, -kappa_);
        r = std::pow(a - u * (a - b), -1.0 / kappa_);
      }
      Vec dir(dim_);
      double norm = 0.0;
      do {
        for (int i = 0; i < dim_; ++i) dir(i) = rng.normal();
        norm = dir.norm();
      } while (norm == 0.0);
      return r / norm * dir;
    }
  }
  return atom_;
}

double MarkLaw::expectation(const std::function<double(const Vec&)>& g) const {
  double s = 0.0;
  for (const auto& n : nodes_) s += n.weight * g(n.point);
  return s;
}

Vec MarkLaw::expectation_vec(const std::function<Vec(const Vec&)>& g) const {
  Vec s;
  bool first = true;
  for (const auto& n : nodes_) {
    const Vec v = g(n.point);
    if (first) {
      s = n.weight * v;
      first = false;
    } else {
      s += n.weight * v;
    }
  }
  return s;
}

double MarkLaw::max_radius() const noexcept {
  if (kind_ == Kind::RadialShell) return r_max_;
  return atom_.norm();
}

// ---------------------------------------------------------------------------
// RatePath

RatePath RatePath::constant(double rate) { return piecewise({0.0}, {rate}); }

RatePath RatePath::piecewise(std::vector<double> breaks, std::vector<double> rates) {
  if (breaks.empty() || breaks.size() != rates.size())
    throw InvalidInput("RatePath: breaks and rates must be non-empty and of equal length");
  if (breaks.front() != 0.0) throw InvalidInput("RatePath: first break must be 0");
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (!(breaks[i] > breaks[i - 1])) throw InvalidInput("RatePath: breaks must increase");
  for (double r : rates)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw InvalidInput("RatePath: rates must be finite and non-negative");
  RatePath p;
  p.breaks_ = std::move(breaks);
  p.rates_ = std::move(rates);
  p.cumulative_.resize(p.breaks_.size());
  p.cumulative_[0] = 0.0;
  for (std::size_t i = 1; i < p.breaks_.size(); ++i)
    p.cumulative_[i] = p.cumulative_[i - 1] + p.rates_[i - 1] * (p.breaks_[i] - p.breaks_[i - 1]);
  return p;
}

double RatePath::rate(double t) const {
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  const std::size_t k = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return rates_[k];
}

double RatePath::integrated(double t) const {
  if (t <= 0.0) return 0.0;
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return cumulative_[k] + rates_[k] * (t - breaks_[k]);
}

double RatePath::inverse(double level) const {
  if (level <= 0.0) return 0.0;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), level);
  std::size_t k = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  // Skip zero-rate segments that end exactly at this level.
  while (rates_[k] == 0.0) {
    if (k + 1 >= rates_.size()) return std::numeric_limits<double>::infinity();
    ++k;
  }
  return breaks_[k] + (level - cumulative_[k]) / rates_[k];
}

bool RatePath::is_zero() const {
  return std::all_of(rates_.begin(), rates_.end(), [](double r) { return r == 0.0; });
}

// ---------------------------------------------------------------------------
// LevyMeasureSpec

LevyMeasureSpec LevyMeasureSpec::none(int dim) {
  LevyMeasureSpec s;
  s.marks = MarkLaw::fixed(Vec::Unit(dim, 0));
  s.rate = RatePath::constant(0.0);
  return s;
}

LevyMeasureSpec LevyMeasureSpec::compound(RatePath rate, MarkLaw marks) {
  LevyMeasureSpec s;
  s.kind = marks.kind() == MarkLaw::Kind::RadialShell ? Kind::TruncatedRadial
                                                      : Kind::FiniteActivityCompound;
  s.rate = std::move(rate);
  s.marks = std::move(marks);
  return s;
}

void LevyMeasureSpec::certify(std::span<const double> exponents) {
  const double mass = rate.integrated(1.0);
  for (double p : exponents) {
    const double value = mass * marks.expectation([p](const Vec& y) {
      const double r2 = y.squaredNorm();
      return r2 * std::pow(1.0 + r2, p);
    });
    if (!std::isfinite(value))
      throw GateViolation(fmt::format("moment certificate for p={} is not finite", p), value, 0.0);
    moment_certificates[p] = value;
  }
}

void LevyMeasureSpec::require_certificate(double p) const {
  const auto it = moment_certificates.lower_bound(p);
  if (it == moment_certificates.end())
    throw GateViolation(fmt::format("no moment certificate covering p={}", p), p,
                        moment_certificates.empty() ? 0.0 : moment_certificates.rbegin()->first);
}

// ---------------------------------------------------------------------------
// grids and sampling

std::vector<double> uniform_grid(double t0, double t1, std::size_t steps) {
  if (steps == 0) return {t0};
  std::vector<double> g(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i)
    g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(steps);
  g.back() = t1;
  return g;
}

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) throw InvalidInput("time grid is empty");
  if (grid.front() < 0.0 || grid.back() > 1.0) throw InvalidInput("time grid must lie in [0, 1]");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InvalidInput("time grid must be strictly increasing");
}

NoisePath sample_brownian(std::span<const double> grid, int dim, std::uint64_t seed,
                          std::uint64_t stream_id) {
  validate_grid(grid);
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("sample_brownian: bad dimension");
  NoisePath path;
  path.dim = dim;
  path.seed = seed;
  path.stream_id = stream_id;
  path.time_grid.assign(grid.begin(), grid.end());
  path.jump_at.assign(grid.size(), -1);
  path.on_base_grid.assign(grid.size(), 1);
  path.increments.reserve(grid.size() - 1);
  RandomStream rng(seed, stream_id, Channel::Brownian);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double sd = std::sqrt(grid[i + 1] - grid[i]);
    Vec dw(dim);
    for (int k = 0; k < dim; ++k) dw(k) = sd * rng.normal();
    path.increments.push_back(dw);
  }
  return path;
}

std::vector<JumpEvent> sample_jumps(const LevyMeasureSpec& spec, double t0, double t1,
                                    std::uint64_t seed, std::uint64_t stream_id) {
  std::vector<JumpEvent> events;
  if (spec.rate.is_zero() || !(t1 > t0)) return events;
  RandomStream clock(seed, stream_id, Channel::JumpTimes);
  RandomStream marks(seed, stream_id, Channel::JumpMarks);
  double level = spec.rate.integrated(t0);
  const double end_level = spec.rate.integrated(t1);
  while (true) {
    level += clock.exponential();
    if (level > end_level) break;
    const double tau = spec.rate.inverse(level);
    if (!(tau > t0) || tau > t1) break;
    if (!events.empty() && !(tau > events.back().time)) continue;  // measure-zero tie
    events.push_back({tau, spec.marks.sample(marks), 0});
  }
  return events;
}

NoisePath sample_noise(std::span<const double> base_grid, const LevyMeasureSpec& spec,
                       std::uint64_t seed, std::uint64_t stream_id) {
  const int dim = spec.dim();
  NoisePath base = sample_brownian(base_grid, dim, seed, stream_id);
  auto events = sample_jumps(spec, base_grid.front(), base_grid.back(), seed, stream_id);
  if (events.empty()) return base;

  NoisePath path;
  path.dim = dim;
  path.seed = seed;
  path.stream_id = stream_id;
  RandomStream bridge(seed, stream_id, Channel::Bridge);

  path.time_grid.push_back(base.time_grid.front());
  path.jump_at.push_back(-1);
  path.on_base_grid.push_back(1);

  std::size_t next = 0;
  for (std::size_t k = 0; k + 1 < base.time_grid.size(); ++k) {
    const double right = base.time_grid[k + 1];
    const Vec& total = base.increments[k];
    double left = base.time_grid[k];
    Vec consumed = Vec::Zero(dim);
    while (next < events.size() && events[next].time < right) {
      const double tau = events[next].time;
      const double span = right - left;
      const double frac = (tau - left) / span;
      const double sd = std::sqrt((tau - left) * (right - tau) / span);
      Vec piece(dim);
      for (int i = 0; i < dim; ++i) piece(i) = frac * (total(i) - consumed(i)) + sd * bridge.normal();
      consumed += piece;
      path.increments.push_back(piece);
      path.time_grid.push_back(tau);
      path.on_base_grid.push_back(0);
      path.jump_at.push_back(static_cast<int>(path.jumps.size()));
      events[next].grid_index = path.time_grid.size() - 1;
      path.jumps.push_back(events[next]);
      left = tau;
      ++next;
    }
    path.increments.push_back(total - consumed);
    path.time_grid.push_back(right);
    path.on_base_grid.push_back(1);
    path.jump_at.push_back(-1);
    if (next < events.size() && events[next].time == right) {
      events[next].grid_index = path.time_grid.size() - 1;
      path.jump_at.back() = static_cast<int>(path.jumps.size());
      path.jumps.push_back(events[next]);
      ++next;
    }
  }
  return path;
}

NoisePath NoisePath::coarsened(int factor) const {
  if (factor < 1) throw InvalidInput("coarsened: factor must be >= 1");
  if (factor == 1) return *this;
  std::size_t base_count = 0;
  for (char b : on_base_grid) base_count += b ? 1 : 0;
  if ((base_count - 1) % static_cast<std::size_t>(factor) != 0)
    throw InvalidInput("coarsened: base interval count not divisible by factor");

  NoisePath out;
  out.dim = dim;
  out.seed = seed;
  out.stream_id = stream_id;
  std::size_t ordinal = 0;
  Vec acc = Vec::Zero(dim);
  for (std::size_t i = 0; i < time_grid.size(); ++i) {
    if (i > 0) acc += increments[i - 1];
    const bool base = on_base_grid[i] != 0;
    const bool keep_base = base && ordinal % static_cast<std::size_t>(factor) == 0;
    if (base) ++ordinal;
    if (!keep_base && jump_at[i] < 0) continue;
    if (i > 0) {
      out.increments.push_back(acc);
      acc.setZero();
    }
    out.time_grid.push_back(time_grid[i]);
    out.on_base_grid.push_back(keep_base ? 1 : 0);
    if (jump_at[i] >= 0) {
      JumpEvent ev = jumps[static_cast<std::size_t>(jump_at[i])];
      ev.grid_index = out.time_grid.size() - 1;
      out.jump_at.push_back(static_cast<int>(out.jumps.size()));
      out.jumps.push_back(ev);
    } else {
      out.jump_at.push_back(-1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// compensators and the exponential moment identity

double compensator_integral(const LevyMeasureSpec& spec,
                            const std::function<double(const Vec&)>& g, double t) {
  double s = 0.0;
  for (const auto& n : spec.marks.nodes()) {
    const double v = g(n.point);
    if (!std::isfinite(v)) throw InvalidInput("compensator_integral: integrand not finite on support");
    s += n.weight * v;
  }
  return spec.rate.integrated(t) * s;
}

Vec compensator_integral_vec(const LevyMeasureSpec& spec,
                             const std::function<Vec(const Vec&)>& g, double t) {
  Vec s;
  bool first = true;
  for (const auto& n : spec.marks.nodes()) {
    const Vec v = g(n.point);
    if (!v.allFinite()) throw InvalidInput("compensator_integral: integrand not finite on support");
    if (first) {
      s = n.weight * v;
      first = false;
    } else {
      s += n.weight * v;
    }
  }
  return spec.rate.integrated(t) * s;
}

ExponentialMomentResult exponential_moment_check(const std::function<double(const Vec&)>& L,
                                                 double bound, const LevyMeasureSpec& spec,
                                                 double t, std::size_t n_paths,
                                                 std::uint64_t seed) {
  if (!(bound >= 0.0) || !std::isfinite(bound))
    throw InvalidInput("exponential_moment_check: bound must be finite");
  for (const auto& n : spec.marks.nodes())
    if (!(std::abs(L(n.point)) <= bound))
      throw InvalidInput("exponential_moment_check: |L| exceeds the declared bound");

  ExponentialMomentResult r;
  r.paths = n_paths;
  r.closed_form = std::exp(compensator_integral(
      spec, [&](const Vec& y) { return std::expm1(L(y) * L(y)); }, t));

  std::vector<double> samples(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    double s = 0.0;
    for (const auto& ev : sample_jumps(spec, 0.0, t, seed, p)) {
      const double l = L(ev.mark);
      if (!(std::abs(l) <= bound))
        throw InvalidInput("exponential_moment_check: |L| exceeds the declared bound");
      s += l * l;
    }
    samples[p] = std::exp(s);
  }
  const Estimate e = estimate(samples);
  r.mc_estimate = e.mean;
  r.standard_error = e.standard_error;
  return r;
}

// ---------------------------------------------------------------------------
// CSV

void write_noise_csv(std::ostream& out, const NoisePath& path) {
  out << "# flowjump noise path v1\n[meta]\ndim,seed,stream_id\n";
  out << path.dim << ',' << path.seed << ',' << path.stream_id << '\n';
  out << "[grid]\nindex,t,base\n";
  for (std::size_t i = 0; i < path.time_grid.size(); ++i)
    out << fmt::format("{},{:.17g},{}\n", i, path.time_grid[i], int(path.on_base_grid[i]));
  out << "[increments]\nindex";
  for (int k = 0; k < path.dim; ++k) out << ",dw" << k + 1;
  out << '\n';
  for (std::size_t i = 0; i < path.increments.size(); ++i) {
    out << i;
    for (int k = 0; k < path.dim; ++k) out << fmt::format(",{:.17g}", path.increments[i](k));
    out << '\n';
  }
  out << "[jumps]\nindex,t,grid_index";
  for (int k = 0; k < path.dim; ++k) out << ",y" << k + 1;
  out << '\n';
  for (std::size_t j = 0; j < path.jumps.size(); ++j) {
    const auto& ev = path.jumps[j];
    out << fmt::format("{},{:.17g},{}", j, ev.time, ev.grid_index);
    for (int k = 0; k < path.dim; ++k) out << fmt::format(",{:.17g}", ev.mark(k));
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

NoisePath read_noise_csv(std::istream& in) {
  NoisePath path;
  std::string line, section;
  bool header_pending = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      section = line;
      header_pending = true;
      continue;
    }
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = split_csv(line);
    try {
      if (section == "[meta]") {
        if (cells.size() != 3) throw InvalidInput("noise csv: bad meta row");
        path.dim = std::stoi(cells[0]);
        path.seed = std::stoull(cells[1]);
        path.stream_id = std::stoull(cells[2]);
      } else if (section == "[grid]") {
        if (cells.size() != 3) throw InvalidInput("noise csv: bad grid row");
        path.time_grid.push_back(std::stod(cells[1]));
        path.on_base_grid.push_back(static_cast<char>(std::stoi(cells[2])));
        path.jump_at.push_back(-1);
      } else if (section == "[increments]") {
        if (static_cast<int>(cells.size()) != path.dim + 1)
          throw InvalidInput("noise csv: bad increment row");
        Vec dw(path.dim);
        for (int k = 0; k < path.dim; ++k) dw(k) = std::stod(cells[static_cast<std::size_t>(k) + 1]);
        path.increments.push_back(dw);
      } else if (section == "[jumps]") {
        if (static_cast<int>(cells.size()) != path.dim + 3)
          throw InvalidInput("noise csv: bad jump row");
        JumpEvent ev;
        ev.time = std::stod(cells[1]);
        ev.grid_index = std::stoull(cells[2]);
        ev.mark = Vec(path.dim);
        for (int k = 0; k < path.dim; ++k) ev.mark(k) = std::stod(cells[static_cast<std::size_t>(k) + 3]);
        if (ev.grid_index >= path.jump_at.size())
          throw InvalidInput("noise csv: jump grid index out of range");
        path.jump_at[ev.grid_index] = static_cast<int>(path.jumps.size());
        path.jumps.push_back(ev);
      } else {
        throw InvalidInput("noise csv: data outside a known section");
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const InvalidInput*>(&e)) throw;
      throw InvalidInput(std::string("noise csv: unparsable value: ") + e.what());
    }
  }
  if (path.time_grid.empty() || path.increments.size() + 1 != path.time_grid.size())
    throw InvalidInput("noise csv: grid and increments are inconsistent");
  validate_grid(path.time_grid);
  return path;
}

}  // namespace flowjump
