#include "flowjump/mollify.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "flowjump/quadrature.hpp"

namespace flowjump {

namespace {

constexpr int kMollifierOrder = 8;

double kernel_profile(MollifierKernel kernel, double r2) {
  if (r2 >= 1.0) return 0.0;
  switch (kernel) {
    case MollifierKernel::Bump: return std::exp(-1.0 / (1.0 - r2));
    case MollifierKernel::Polynomial: return std::pow(1.0 - r2, 4);
  }
  return 0.0;
}

// d/d(r2) of the profile; grad rho(z) = 2 z * profile'(|z|^2).
double kernel_profile_slope(MollifierKernel kernel, double r2) {
  if (r2 >= 1.0) return 0.0;
  switch (kernel) {
    case MollifierKernel::Bump: {
      const double s = 1.0 - r2;
      return -std::exp(-1.0 / s) / (s * s);
    }
    case MollifierKernel::Polynomial: return -4.0 * std::pow(1.0 - r2, 3);
  }
  return 0.0;
}

MollifierRule build_rule(int dim, MollifierKernel kernel) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("mollifier: dimension out of range");
  const GaussRule g = gauss_legendre(kMollifierOrder);
  const int m = static_cast<int>(g.nodes.size());
  MollifierRule rule;
  rule.dim = dim;
  rule.kernel = kernel;
  std::vector<int> idx(dim, 0);
  double mass = 0.0;
  while (true) {
    Vec z(dim);
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      z[a] = g.nodes[idx[a]];
      w *= g.weights[idx[a]];
    }
    const double r2 = z.squaredNorm();
    if (r2 < 1.0) {
      const double rho = kernel_profile(kernel, r2);
      rule.nodes.push_back(z);
      rule.weights.push_back(w * rho);
      rule.grad_weights.push_back(w * 2.0 * kernel_profile_slope(kernel, r2) * z);
      mass += w * rho;
    }
    int a = 0;
    while (a < dim && ++idx[a] == m) idx[a++] = 0;
    if (a == dim) break;
  }
  rule.raw_mass = mass;
  for (auto& w : rule.weights) w /= mass;
  // sum_k g_k^j z_k^i is c delta_ij by symmetry; rescale so c = -1.
  double c = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) c += rule.grad_weights[k][0] * rule.nodes[k][0];
  for (auto& gw : rule.grad_weights) gw *= -1.0 / c;
  return rule;
}

double psi(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double psi_prime(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

}  // namespace

const MollifierRule& MollifierRule::get(int dim, MollifierKernel kernel) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, MollifierRule> cache;
  std::lock_guard lock(mutex);
  const auto key = std::make_pair(dim, static_cast<int>(kernel));
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_rule(dim, kernel)).first;
  return it->second;
}

double cutoff(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double a = psi(2.0 - r);
  const double c = psi(r - 1.0);
  return a / (a + c);
}

double cutoff_derivative(double r) {
  if (r <= 1.0 || r >= 2.0) return 0.0;
  const double a = psi(2.0 - r);
  const double c = psi(r - 1.0);
  const double da = -psi_prime(2.0 - r);
  const double dc = psi_prime(r - 1.0);
  return (da * c - a * dc) / ((a + c) * (a + c));
}

MollifiedDrift::MollifiedDrift(std::shared_ptr<const DriftTerm> base, int level, MollifierKernel kernel)
    : base_(std::move(base)), level_(level), rule_(&MollifierRule::get(base_->dim(), kernel)) {
  if (level < 1) throw InvalidInput("mollify: level must be >= 1");
}

std::string MollifiedDrift::name() const { return base_->name() + "^" + std::to_string(level_); }

Vec MollifiedDrift::convolved(double t, const Vec& x) const {
  if (base_->is_constant()) return base_->value(t, x);
  const double inv = 1.0 / level_;
  Vec acc = Vec::Zero(dim());
  for (std::size_t k = 0; k < rule_->nodes.size(); ++k)
    acc += rule_->weights[k] * base_->value(t, x - inv * rule_->nodes[k]);
  return acc;
}

Vec MollifiedDrift::value(double t, const Vec& x) const {
  const double chi = cutoff(x.norm() / level_);
  if (chi == 0.0) return Vec::Zero(dim());
  return chi * convolved(t, x);
}

Mat MollifiedDrift::gradient(double t, const Vec& x) const {
  const int d = dim();
  const double r = x.norm();
  const double chi = cutoff(r / level_);
  if (chi == 0.0) return Mat::Zero(d, d);
  Vec conv = Vec::Zero(d);
  Mat grad = Mat::Zero(d, d);
  if (base_->is_constant()) {
    conv = base_->value(t, x);
  } else {
    const double inv = 1.0 / level_;
    for (std::size_t k = 0; k < rule_->nodes.size(); ++k) {
      const Vec b = base_->value(t, x - inv * rule_->nodes[k]);
      conv += rule_->weights[k] * b;
      grad += b * rule_->grad_weights[k].transpose();
    }
    grad *= static_cast<double>(level_);
  }
  grad *= chi;
  const double dchi = cutoff_derivative(r / level_);
  if (dchi != 0.0) grad += conv * (dchi / (level_ * r) * x).transpose();
  return grad;
}

MollifiedDiffusion::MollifiedDiffusion(std::shared_ptr<const DiffusionTerm> base, int level,
                                       MollifierKernel kernel)
    : base_(std::move(base)), level_(level), rule_(&MollifierRule::get(base_->dim(), kernel)) {
  if (level < 1) throw InvalidInput("mollify: level must be >= 1");
}

std::string MollifiedDiffusion::name() const { return base_->name() + "^" + std::to_string(level_); }

Mat MollifiedDiffusion::value(double t, const Vec& x) const {
  if (base_->is_constant()) return base_->value(t, x);
  const double inv = 1.0 / level_;
  Mat acc = Mat::Zero(dim(), dim());
  for (std::size_t k = 0; k < rule_->nodes.size(); ++k)
    acc += rule_->weights[k] * base_->value(t, x - inv * rule_->nodes[k]);
  return acc;
}

DiffusionGradient MollifiedDiffusion::gradient(double t, const Vec& x) const {
  const int d = dim();
  DiffusionGradient g(d);
  if (base_->is_constant()) return g;
  const double inv = 1.0 / level_;
  for (std::size_t k = 0; k < rule_->nodes.size(); ++k) {
    const Mat s = base_->value(t, x - inv * rule_->nodes[k]);
    for (int j = 0; j < d; ++j) g.by_axis[j] += (level_ * rule_->grad_weights[k][j]) * s;
  }
  return g;
}

MollifiedJump::MollifiedJump(std::shared_ptr<const JumpTerm> base, int level, MollifierKernel kernel)
    : base_(std::move(base)), level_(level), rule_(&MollifierRule::get(base_->dim(), kernel)) {
  if (level < 1) throw InvalidInput("mollify: level must be >= 1");
}

std::string MollifiedJump::name() const { return base_->name() + "^" + std::to_string(level_); }

Vec MollifiedJump::value(double t, const Vec& x, const Vec& y) const {
  if (base_->is_state_independent()) return base_->value(t, x, y);
  const double inv = 1.0 / level_;
  Vec acc = Vec::Zero(dim());
  for (std::size_t k = 0; k < rule_->nodes.size(); ++k)
    acc += rule_->weights[k] * base_->value(t, x - inv * rule_->nodes[k], y);
  return acc;
}

Mat MollifiedJump::gradient(double t, const Vec& x, const Vec& y) const {
  const int d = dim();
  if (base_->is_state_independent()) return Mat::Zero(d, d);
  const double inv = 1.0 / level_;
  Mat g = Mat::Zero(d, d);
  for (std::size_t k = 0; k < rule_->nodes.size(); ++k)
    g += base_->value(t, x - inv * rule_->nodes[k], y) * rule_->grad_weights[k].transpose();
  return level_ * g;
}

CoefficientField mollify(const CoefficientField& field, int n, MollifierKernel kernel) {
  if (n < 1) throw InvalidInput("mollify: level must be >= 1");
  auto drift = std::make_shared<MollifiedDrift>(field.drift_ptr(), n, kernel);
  auto diffusion = std::make_shared<MollifiedDiffusion>(field.diffusion_ptr(), n, kernel);
  auto jump = std::make_shared<MollifiedJump>(field.jump_ptr(), n, kernel);
  Regularity reg = field.regularity();
  auto l2 = reg.L2;
  reg.L2 = [l2](const Vec& y) { return 2.0 * l2(y); };
  reg.drift_lipschitz = true;
  return CoefficientField(drift, diffusion, jump, std::move(reg),
                          field.name() + "^" + std::to_string(n));
}

double lq_norm_on_ball(const std::function<double(const Vec&)>& g, int dim, double radius, double q) {
  if (!(q >= 1.0)) throw InvalidInput("lq_norm_on_ball: q must be >= 1");
  if (!(radius > 0.0)) throw InvalidInput("lq_norm_on_ball: radius must be positive");
  const GaussRule unit = gauss_legendre(8);
  constexpr int kPanels = 24;  // panels [R 2^-(k+1), R 2^-k], plus the innermost [0, R 2^-24]
  std::vector<double> rn, rw;
  auto add_panel = [&](double a, double b) {
    for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
      rn.push_back(0.5 * (a + b) + 0.5 * (b - a) * unit.nodes[i]);
      rw.push_back(0.5 * (b - a) * unit.weights[i]);
    }
  };
  double hi = radius;
  for (int k = 0; k < kPanels; ++k) {
    const double lo = 0.5 * hi;
    // split the outer panels further: the integrand need not be smooth in r
    const int sub = k < 4 ? 8 : 2;
    for (int s = 0; s < sub; ++s) add_panel(lo + (hi - lo) * s / sub, lo + (hi - lo) * (s + 1) / sub);
    hi = lo;
  }
  add_panel(0.0, hi);

  double total = 0.0;
  if (dim == 1) {
    for (std::size_t i = 0; i < rn.size(); ++i)
      for (double sgn : {-1.0, 1.0}) {
        Vec x(1);
        x << sgn * rn[i];
        total += rw[i] * std::pow(std::abs(g(x)), q);
      }
  } else if (dim == 2) {
    constexpr int kAngles = 64;
    for (std::size_t i = 0; i < rn.size(); ++i) {
      double ring = 0.0;
      for (int a = 0; a < kAngles; ++a) {
        const double th = 2.0 * std::numbers::pi * (a + 0.5) / kAngles;
        Vec x(2);
        x << rn[i] * std::cos(th), rn[i] * std::sin(th);
        ring += std::pow(std::abs(g(x)), q);
      }
      total += rw[i] * rn[i] * ring * 2.0 * std::numbers::pi / kAngles;
    }
  } else if (dim == 3) {
    const GaussRule polar = gauss_legendre(16);
    constexpr int kAzimuth = 32;
    for (std::size_t i = 0; i < rn.size(); ++i) {
      double shell = 0.0;
      for (std::size_t p = 0; p < polar.nodes.size(); ++p) {
        const double ct = polar.nodes[p];
        const double st = std::sqrt(1.0 - ct * ct);
        for (int a = 0; a < kAzimuth; ++a) {
          const double ph = 2.0 * std::numbers::pi * (a + 0.5) / kAzimuth;
          Vec x(3);
          x << rn[i] * st * std::cos(ph), rn[i] * st * std::sin(ph), rn[i] * ct;
          shell += polar.weights[p] * std::pow(std::abs(g(x)), q);
        }
      }
      total += rw[i] * rn[i] * rn[i] * shell * 2.0 * std::numbers::pi / kAzimuth;
    }
  } else {
    throw InvalidInput("lq_norm_on_ball: dimension must be 1, 2 or 3");
  }
  return std::pow(total, 1.0 / q);
}

double drift_lq_distance(const DriftTerm& a, const DriftTerm& b, double q, double radius, double t) {
  if (a.dim() != b.dim()) throw InvalidInput("drift_lq_distance: dimension mismatch");
  return lq_norm_on_ball([&](const Vec& x) { return (a.value(t, x) - b.value(t, x)).norm(); }, a.dim(),
                         radius, q);
}

double diffusion_lq_distance(const DiffusionTerm& a, const DiffusionTerm& b, double q, double radius,
                             double t) {
  if (a.dim() != b.dim()) throw InvalidInput("diffusion_lq_distance: dimension mismatch");
  return lq_norm_on_ball([&](const Vec& x) { return (a.value(t, x) - b.value(t, x)).norm(); }, a.dim(),
                         radius, q);
}

}  // namespace flowjump
