#include "flowjump/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace flowjump {

LinearDrift::LinearDrift(Mat a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols() || a_.rows() < 1) throw InvalidInput("LinearDrift: matrix must be square");
}

Vec UnitRadialDrift::value(double, const Vec& x) const {
  const double r = x.norm();
  if (r == 0.0) return Vec::Zero(dim_);
  return x / r;
}

Mat UnitRadialDrift::gradient(double, const Vec& x) const {
  const double r = x.norm();
  if (r == 0.0) throw SingularPoint("x/|x|: gradient undefined at the origin");
  const Vec u = x / r;
  return (Mat::Identity(dim_, dim_) - u * u.transpose()) / r;
}

double UnitRadialDrift::divergence(double, const Vec& x) const {
  const double r = x.norm();
  if (r == 0.0) throw SingularPoint("x/|x|: divergence undefined at the origin");
  return (dim_ - 1) / r;
}

Vec SmoothCorpusDrift::value(double, const Vec& x) const {
  Vec b(dim_);
  for (int i = 0; i < dim_; ++i) {
    const int n = (i + 1) % dim_;
    b[i] = scale_ * (0.5 * std::sin(x[n]) + 0.3 * std::cos(x[i]));
  }
  return b;
}

Mat SmoothCorpusDrift::gradient(double, const Vec& x) const {
  Mat g = Mat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    const int n = (i + 1) % dim_;
    g(i, n) += scale_ * 0.5 * std::cos(x[n]);
    g(i, i) += -scale_ * 0.3 * std::sin(x[i]);
  }
  return g;
}

Vec SwirlBumpDrift::value(double, const Vec& x) const {
  const double e = k_ * std::exp(-0.5 * x.squaredNorm());
  Vec b(2);
  b << -x[1] * e, x[0] * e;
  return b;
}

Mat SwirlBumpDrift::gradient(double, const Vec& x) const {
  const double e = k_ * std::exp(-0.5 * x.squaredNorm());
  Mat g(2, 2);
  g << x[0] * x[1] * e, (x[1] * x[1] - 1.0) * e,
       (1.0 - x[0] * x[0]) * e, -x[0] * x[1] * e;
  return g;
}

ShiftedDrift::ShiftedDrift(std::shared_ptr<const DriftTerm> base, Vec shift)
    : base_(std::move(base)), shift_(std::move(shift)) {
  if (!base_ || base_->dim() != shift_.size()) throw InvalidInput("ShiftedDrift: dimension mismatch");
}

TabulatedDrift2D::TabulatedDrift2D(std::vector<double> xs, std::vector<double> ys,
                                   std::vector<Vec> values)
    : xs_(std::move(xs)), ys_(std::move(ys)), values_(std::move(values)) {
  if (xs_.size() < 2 || ys_.size() < 2) throw InvalidInput("TabulatedDrift2D: need at least 2x2 nodes");
  if (values_.size() != xs_.size() * ys_.size())
    throw InvalidInput("TabulatedDrift2D: value count does not match grid");
  if (!std::is_sorted(xs_.begin(), xs_.end()) || !std::is_sorted(ys_.begin(), ys_.end()) ||
      std::adjacent_find(xs_.begin(), xs_.end()) != xs_.end() ||
      std::adjacent_find(ys_.begin(), ys_.end()) != ys_.end())
    throw InvalidInput("TabulatedDrift2D: axes must be strictly increasing");
}

std::shared_ptr<TabulatedDrift2D> TabulatedDrift2D::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("TabulatedDrift2D: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  struct Row { double x, y, b1, b2; };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Row r{};
    if (!(ss >> r.x >> r.y >> r.b1 >> r.b2)) throw InvalidInput("TabulatedDrift2D: bad row: " + line);
    rows.push_back(r);
  }
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(r.x);
    ys.push_back(r.y);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  if (rows.size() != xs.size() * ys.size()) throw InvalidInput("TabulatedDrift2D: grid is not complete");
  std::vector<Vec> values(rows.size(), Vec::Zero(2));
  std::vector<char> seen(rows.size(), 0);
  for (const auto& r : rows) {
    const auto i = std::lower_bound(xs.begin(), xs.end(), r.x) - xs.begin();
    const auto j = std::lower_bound(ys.begin(), ys.end(), r.y) - ys.begin();
    const auto k = static_cast<std::size_t>(i) * ys.size() + static_cast<std::size_t>(j);
    if (seen[k]) throw InvalidInput("TabulatedDrift2D: duplicate node");
    seen[k] = 1;
    values[k] << r.b1, r.b2;
  }
  return std::make_shared<TabulatedDrift2D>(std::move(xs), std::move(ys), std::move(values));
}

Vec TabulatedDrift2D::value(double, const Vec& x) const {
  auto locate = [](const std::vector<double>& axis, double v, std::size_t& lo, double& w) {
    v = std::clamp(v, axis.front(), axis.back());
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - axis.begin()) - 1));
    lo = std::min(lo, axis.size() - 2);
    w = (v - axis[lo]) / (axis[lo + 1] - axis[lo]);
  };
  std::size_t i = 0, j = 0;
  double wx = 0.0, wy = 0.0;
  locate(xs_, x[0], i, wx);
  locate(ys_, x[1], j, wy);
  const std::size_t ny = ys_.size();
  const Vec& v00 = values_[i * ny + j];
  const Vec& v01 = values_[i * ny + j + 1];
  const Vec& v10 = values_[(i + 1) * ny + j];
  const Vec& v11 = values_[(i + 1) * ny + j + 1];
  return (1 - wx) * ((1 - wy) * v00 + wy * v01) + wx * ((1 - wy) * v10 + wy * v11);
}

std::shared_ptr<ConstantDiffusion> ConstantDiffusion::scaled_identity(int dim, double s) {
  return std::make_shared<ConstantDiffusion>(s * Mat::Identity(dim, dim));
}

Mat SmoothCorpusDiffusion::value(double, const Vec& x) const {
  Mat s(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int k = 0; k < dim_; ++k)
      s(i, k) = (i == k ? s0_ : 0.0) + eps_ * std::sin(x[i] + 2.0 * x[k]);
  return s;
}

DiffusionGradient SmoothCorpusDiffusion::gradient(double, const Vec& x) const {
  DiffusionGradient g(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int k = 0; k < dim_; ++k) {
      const double c = eps_ * std::cos(x[i] + 2.0 * x[k]);
      g.by_axis[i](i, k) += c;
      g.by_axis[k](i, k) += 2.0 * c;
    }
  return g;
}

SmoothCorpusJump::SmoothCorpusJump(int dim, double a) : dim_(dim), a_(a) {
  if (dim < 2) throw InvalidInput("SmoothCorpusJump: needs d >= 2");
  if (!(a >= 0.0 && a < 1.0)) throw InvalidInput("SmoothCorpusJump: amplitude must lie in [0, 1)");
}

Vec SmoothCorpusJump::value(double, const Vec& x, const Vec& y) const {
  const double c = amplitude(y);
  Vec f = y;
  for (int i = 0; i < dim_; ++i) f[i] += c * std::sin(x[i] + 0.5 * x[(i + 1) % dim_]);
  return f;
}

Mat SmoothCorpusJump::gradient(double, const Vec& x, const Vec& y) const {
  const double c = amplitude(y);
  Mat g = Mat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    const int n = (i + 1) % dim_;
    const double cs = c * std::cos(x[i] + 0.5 * x[n]);
    g(i, i) += cs;
    g(i, n) += 0.5 * cs;
  }
  return g;
}

double FieldSpec::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::shared_ptr<const DriftTerm> make_drift(const FieldSpec& spec) {
  const int d = spec.dim;
  if (spec.drift == "zero") return std::make_shared<ZeroDrift>(d);
  if (spec.drift == "constant") {
    Vec c(d);
    for (int i = 0; i < d; ++i) c[i] = spec.param("c" + std::to_string(i + 1), spec.param("c", 0.0));
    return std::make_shared<ConstantDrift>(c);
  }
  if (spec.drift == "linear") {
    Mat a = spec.param("a", 0.0) * Mat::Identity(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        a(i, j) = spec.param("a" + std::to_string(i + 1) + std::to_string(j + 1), a(i, j));
    return std::make_shared<LinearDrift>(a);
  }
  if (spec.drift == "unit_radial") return std::make_shared<UnitRadialDrift>(d);
  if (spec.drift == "smooth") return std::make_shared<SmoothCorpusDrift>(d, spec.param("drift_scale", 1.0));
  if (spec.drift == "swirl") {
    if (d != 2) throw InvalidInput("swirl drift is two-dimensional");
    return std::make_shared<SwirlBumpDrift>(spec.param("k", 1.0));
  }
  if (spec.drift == "tabulated") {
    if (d != 2) throw InvalidInput("tabulated drift is two-dimensional");
    return TabulatedDrift2D::load_csv(spec.table);
  }
  throw InvalidInput("unknown drift id: " + spec.drift);
}

std::shared_ptr<const DiffusionTerm> make_diffusion(const FieldSpec& spec) {
  const int d = spec.dim;
  if (spec.diffusion == "zero") return ConstantDiffusion::scaled_identity(d, 0.0);
  if (spec.diffusion == "constant") return ConstantDiffusion::scaled_identity(d, spec.param("sigma", 1.0));
  if (spec.diffusion == "smooth")
    return std::make_shared<SmoothCorpusDiffusion>(d, spec.param("s0", 0.5), spec.param("eps", 0.1));
  throw InvalidInput("unknown diffusion id: " + spec.diffusion);
}

std::shared_ptr<const JumpTerm> make_jump(const FieldSpec& spec) {
  const int d = spec.dim;
  if (spec.jump == "zero") return std::make_shared<ZeroJump>(d);
  if (spec.jump == "additive") return std::make_shared<AdditiveJump>(d);
  if (spec.jump == "smooth") return std::make_shared<SmoothCorpusJump>(d, spec.param("jump_amplitude", spec.alpha));
  throw InvalidInput("unknown jump id: " + spec.jump);
}

CoefficientField make_field(const FieldSpec& spec) {
  if (spec.dim < 1 || spec.dim > kMaxDim) throw InvalidInput("field dimension out of range");
  Regularity reg;
  reg.alpha = spec.alpha;
  reg.sobolev_q = spec.sobolev_q;
  reg.drift_lipschitz = spec.drift != "unit_radial" && spec.drift != "tabulated";
  auto jump = make_jump(spec);
  if (spec.jump == "smooth") {
    auto sj = std::static_pointer_cast<const SmoothCorpusJump>(jump);
    reg.L1 = [sj](const Vec& y) { return sj->amplitude(y); };
    if (spec.param("jump_amplitude", spec.alpha) > spec.alpha)
      throw GateViolation("jump amplitude exceeds alpha", spec.param("jump_amplitude", spec.alpha),
                          spec.alpha);
  } else {
    reg.L1 = [](const Vec&) { return 0.0; };
  }
  reg.L2 = spec.jump == "zero" ? MarkFunction([](const Vec&) { return 0.0; })
                               : MarkFunction([](const Vec& y) { return y.norm(); });
  std::string name = spec.drift + "/" + spec.diffusion + "/" + spec.jump;
  return CoefficientField(make_drift(spec), make_diffusion(spec), std::move(jump), std::move(reg),
                          std::move(name));
}

}  // namespace flowjump
