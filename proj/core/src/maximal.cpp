#include "flowjump/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowjump {

SampledField::SampledField(int dim, Vec lower, double step, std::array<int, 3> counts,
                           std::vector<double> values)
    : dim_(dim), lower_(std::move(lower)), step_(step), counts_(counts), values_(std::move(values)) {
  if (dim < 1 || dim > 3) throw InvalidInput("SampledField: dimension must be 1, 2 or 3");
  if (lower_.size() != dim) throw InvalidInput("SampledField: corner dimension mismatch");
  if (!(step > 0.0)) throw InvalidInput("SampledField: step must be positive");
  for (int a = dim; a < 3; ++a) counts_[a] = 1;
  std::size_t total = 1;
  for (int a = 0; a < 3; ++a) {
    if (counts_[a] < 1) throw InvalidInput("SampledField: empty axis");
    total *= static_cast<std::size_t>(counts_[a]);
  }
  if (values_.size() != total) throw InvalidInput("SampledField: value count mismatch");
  const std::size_t rows = total / counts_[0];
  prefix_.assign(rows * (counts_[0] + 1), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* p = prefix_.data() + r * (counts_[0] + 1);
    for (int i = 0; i < counts_[0]; ++i) p[i + 1] = p[i] + values_[r * counts_[0] + i];
  }
}

SampledField SampledField::sample(int dim, double half_width, double step,
                                  const std::function<double(const Vec&)>& phi) {
  const int n = static_cast<int>(std::floor(2.0 * half_width / step + 1e-9)) + 1;
  std::array<int, 3> counts{1, 1, 1};
  for (int a = 0; a < dim; ++a) counts[a] = n;
  Vec lower = Vec::Constant(dim, -half_width);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(counts[0]) * counts[1] * counts[2]);
  for (int k = 0; k < counts[2]; ++k)
    for (int j = 0; j < counts[1]; ++j)
      for (int i = 0; i < counts[0]; ++i) {
        Vec x(dim);
        const int idx[3] = {i, j, k};
        for (int a = 0; a < dim; ++a) x[a] = lower[a] + step * idx[a];
        values.push_back(phi(x));
      }
  return SampledField(dim, lower, step, counts, std::move(values));
}

Vec SampledField::node(std::size_t index) const {
  Vec x(dim_);
  std::size_t rest = index;
  for (int a = 0; a < dim_; ++a) {
    x[a] = lower_[a] + step_ * static_cast<double>(rest % counts_[a]);
    rest /= counts_[a];
  }
  return x;
}

double SampledField::cell_volume() const { return std::pow(step_, dim_); }

double SampledField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SampledField SampledField::map(const std::function<double(double)>& g) const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), g);
  return SampledField(dim_, lower_, step_, counts_, std::move(out));
}

double SampledField::ball_average(const Vec& x, double r) const {
  if (x.size() != dim_) throw InvalidInput("ball_average: dimension mismatch");
  // Index ranges of the bounding box along axes 1 and 2; chords along axis 0
  // are summed from the row prefix sums.
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int a = 1; a < 3; ++a) {
    if (a >= dim_) continue;
    lo[a] = std::max(0, static_cast<int>(std::ceil((x[a] - r - lower_[a]) / step_ - 1e-12)));
    hi[a] = std::min(counts_[a] - 1, static_cast<int>(std::floor((x[a] + r - lower_[a]) / step_ + 1e-12)));
  }
  const double r2 = r * r;
  double sum = 0.0;
  std::size_t count = 0;
  for (int k = lo[2]; k <= hi[2]; ++k) {
    const double dz = dim_ > 2 ? lower_[2] + step_ * k - x[2] : 0.0;
    for (int j = lo[1]; j <= hi[1]; ++j) {
      const double dy = dim_ > 1 ? lower_[1] + step_ * j - x[1] : 0.0;
      const double rem = r2 - dy * dy - dz * dz;
      if (rem < 0.0) continue;
      const double half = std::sqrt(rem);
      const int i0 = std::max(0, static_cast<int>(std::ceil((x[0] - half - lower_[0]) / step_ - 1e-12)));
      const int i1 = std::min(counts_[0] - 1,
                              static_cast<int>(std::floor((x[0] + half - lower_[0]) / step_ + 1e-12)));
      if (i1 < i0) continue;
      const double* p = prefix_.data() + (static_cast<std::size_t>(k) * counts_[1] + j) * (counts_[0] + 1);
      sum += p[i1 + 1] - p[i0];
      count += static_cast<std::size_t>(i1 - i0 + 1);
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double local_maximal_function(const SampledField& phi, double R, const Vec& x, int radii) {
  if (!(R > 0.0)) throw InvalidInput("local_maximal_function: R must be positive");
  if (radii < 2) throw InvalidInput("local_maximal_function: need at least two radii");
  if (phi.step() > R / 16.0)
    throw InvalidInput("local_maximal_function: grid step exceeds R/16; refine the sampling");
  const double r0 = 4.0 * phi.step();
  double best = 0.0;
  for (int k = 1; k <= radii; ++k) {
    const double r = r0 * std::pow(R / r0, static_cast<double>(k) / radii);
    best = std::max(best, phi.ball_average(x, r));
  }
  return best;
}

MorreyReport morrey_pointwise_check(const std::function<double(const Vec&)>& phi,
                                    const SampledField& grad_norm, const Vec& x, const Vec& y,
                                    double R, double constant) {
  MorreyReport report;
  report.constant = constant;
  const double dist = (x - y).norm();
  if (dist == 0.0) return report;
  if (dist > R) throw InvalidInput("morrey_pointwise_check: |x - y| must not exceed R");
  const double denom =
      dist * (local_maximal_function(grad_norm, R, x) + local_maximal_function(grad_norm, R, y));
  const double num = std::abs(phi(x) - phi(y));
  report.ratio = denom > 0.0 ? num / denom : (num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  report.pass = report.ratio <= constant;
  return report;
}

MaximalLpReport maximal_lp_bound_check(const SampledField& phi, double N, double R, double p,
                                       double constant) {
  if (!(p > 1.0)) throw InvalidInput("maximal_lp_bound_check: p must exceed 1");
  const SampledField abs_phi = phi.map([](double v) { return std::abs(v); });
  double lhs = 0.0, base = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const Vec x = phi.node(i);
    const double r = x.norm();
    if (r <= N) lhs += std::pow(local_maximal_function(abs_phi, R, x), p);
    if (r <= N + R) base += std::pow(std::abs(phi.value(i)), p);
  }
  const double vol = phi.cell_volume();
  MaximalLpReport report;
  report.lhs = std::pow(lhs * vol, 1.0 / p);
  const double norm = std::pow(base * vol, 1.0 / p);
  report.rhs = constant * norm;
  report.raw_ratio = norm > 0.0 ? report.lhs / norm : 0.0;
  report.pass = std::isfinite(report.lhs) && report.lhs <= report.rhs;
  return report;
}

}  // namespace flowjump
