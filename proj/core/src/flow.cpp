#include "flowjump/flow.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "flowjump/determinant.hpp"

namespace flowjump {

void SdeModel::validate() const {
  if (levy.dim() != field.dim()) throw InvalidInput("SdeModel: mark dimension differs from field dimension");
}

double FlowState::det_explicit() const {
  return std::exp(A1 + A2 + Mc + Md - 0.5 * qv + log_jump_terms);
}

double FlowState::det_direct() const { return determinant(J); }

FlowStepper::FlowStepper(const SdeModel& model, SchemeOptions options)
    : model_(&model), options_(options) {
  model.validate();
  if (options_.decomposition) options_.jacobian = true;
  if (model.dim() >= 2) beta_ = beta_alpha(model.dim(), model.field.regularity().alpha);
}

FlowState FlowStepper::init(const Vec& x0) const {
  const int d = model_->dim();
  if (x0.size() != d) throw InvalidInput("FlowStepper: initial point has wrong dimension");
  FlowState s;
  s.x = x0;
  s.x_left = x0;
  if (options_.jacobian) s.J = Mat::Identity(d, d);
  return s;
}

void FlowStepper::advance(FlowState& s, const NoisePath& noise, std::size_t step) const {
  if (s.divergent) return;
  const auto& field = model_->field;
  const auto& levy = model_->levy;
  const int d = field.dim();
  const double t0 = noise.time_grid[step];
  const double t1 = noise.time_grid[step + 1];
  const double h = t1 - t0;
  const Vec& dW = noise.increments[step];
  const bool jac = options_.jacobian;
  const bool dec = options_.decomposition;

  const Vec b = field.drift(t0, s.x);
  const Mat sigma = field.diffusion(t0, s.x);
  Vec x_next = s.x + b * h + sigma * dW;

  Mat J_next;
  DiffusionGradient dsigma(0);
  if (jac) {
    const Mat gb = field.drift_term().gradient(t0, s.x);
    J_next = s.J + h * gb * s.J;
    if (!field.diffusion_term().is_constant()) {
      dsigma = field.diffusion_term().gradient(t0, s.x);
      for (int k = 0; k < d; ++k) {
        if (dW[k] == 0.0) continue;
        J_next.noalias() += dW[k] * dsigma.column_jacobian(k) * s.J;
      }
    }
    if (dec) {
      double a1 = gb.trace();
      if (dsigma.dim == d) {
        for (int k = 0; k < d; ++k) {
          const Mat G = dsigma.column_jacobian(k);
          const double tr = G.trace();
          a1 += 0.5 * (tr * tr - (G * G).trace());
          s.Mc += tr * dW[k];
          s.qv += tr * tr * h;
        }
      }
      s.A1 += a1 * h;
    }
  }

  // Compensator slice over (t0, t1], left-point evaluation.
  if (options_.compensator != CompensatorMode::None && !levy.rate.is_zero()) {
    const double dLambda = levy.rate.integrated(t0, t1);
    if (dLambda > 0.0) {
      const auto& jt = field.jump_term();
      const bool state_dep = !jt.is_state_independent();
      Vec ef = Vec::Zero(d);
      Mat egrad = Mat::Zero(d, d);
      double e_det_minus_one = 0.0, e_remainder = 0.0;
      const bool small_only = options_.compensator == CompensatorMode::SmallJumps;
      for (const auto& node : levy.marks.nodes()) {
        if (small_only && !(node.point.norm() < options_.small_jump_radius)) continue;
        ef += node.weight * jt.value(t0, s.x, node.point);
        if (jac && state_dep) {
          const Mat g = jt.gradient(t0, s.x, node.point);
          egrad += node.weight * g;
          if (dec) {
            const double det = determinant(Mat::Identity(d, d) + g);
            e_det_minus_one += node.weight * (det - 1.0);
            e_remainder += node.weight * (det - 1.0 - g.trace());
          }
        }
      }
      x_next -= dLambda * ef;
      if (jac && state_dep) J_next.noalias() -= dLambda * egrad * s.J;
      if (dec) {
        s.A2 += dLambda * e_remainder;
        s.Md -= dLambda * e_det_minus_one;
      }
    }
  }

  s.x_left = x_next;
  if (jac) s.J = J_next;
  const int jump = noise.jump_at[step + 1];
  if (jump >= 0) {
    const Vec& y = noise.jumps[static_cast<std::size_t>(jump)].mark;
    const Vec f = field.jump(t1, s.x_left, y);
    x_next = s.x_left + f;
    ++s.jumps;
    if (jac) {
      const Mat g = field.jump_term().gradient(t1, s.x_left, y);
      if (options_.enforce_jump_gate && d >= 2) {
        const double worst = g.cwiseAbs().maxCoeff();
        const double alpha = field.regularity().alpha;
        if (worst > alpha * (1.0 + 1e-9))
          throw GateViolation("jump Jacobian entry exceeds alpha", worst, alpha);
      }
      const Mat step_matrix = Mat::Identity(d, d) + g;
      s.J = step_matrix * s.J;
      if (dec) {
        const double dM = determinant(step_matrix) - 1.0;
        if (dM <= -1.0) throw ConsistencyError("determinant jump factor 1 + dM is not positive");
        s.Md += dM;
        s.log_jump_terms += std::log1p(dM) - dM;
        s.max_abs_dM = std::max(s.max_abs_dM, std::abs(dM));
        if (beta_ > 0.0 && std::abs(dM) > (1.0 / beta_) * (1.0 + 1e-12)) ++s.dM_bound_violations;
      }
    }
  }
  s.x = x_next;
  if (!s.x.allFinite() || (jac && !s.J.allFinite())) s.divergent = true;
}

void FlowStepper::run(FlowState& state, const NoisePath& noise) const {
  for (std::size_t i = 0; i < noise.steps() && !state.divergent; ++i) advance(state, noise, i);
}

namespace {

void record(Trajectory& traj, const FlowState& s, double t, const SchemeOptions& opt) {
  traj.times.push_back(t);
  traj.states.push_back(s.x);
  traj.left_limits.push_back(s.x_left);
  if (opt.jacobian) traj.jacobians.push_back(s.J);
  if (opt.decomposition) {
    auto& dd = traj.decomposition;
    dd.A1.push_back(s.A1);
    dd.A2.push_back(s.A2);
    dd.Mc.push_back(s.Mc);
    dd.Md.push_back(s.Md);
    dd.qv.push_back(s.qv);
    dd.det_explicit.push_back(s.det_explicit());
    dd.det_direct.push_back(s.det_direct());
  }
}

}  // namespace

Trajectory simulate_flow(const SdeModel& model, const NoisePath& noise, const Vec& x0,
                         SchemeOptions options) {
  FlowStepper stepper(model, options);
  const SchemeOptions& opt = stepper.options();
  FlowState s = stepper.init(x0);
  Trajectory traj;
  record(traj, s, noise.start(), opt);
  for (std::size_t i = 0; i < noise.steps(); ++i) {
    stepper.advance(s, noise, i);
    if (s.divergent) {
      traj.divergent = true;
      break;
    }
    const int jump = noise.jump_at[i + 1];
    if (jump >= 0) {
      JumpRecord jr;
      jr.time = noise.time_grid[i + 1];
      jr.mark = noise.jumps[static_cast<std::size_t>(jump)].mark;
      jr.left = s.x_left;
      jr.right = s.x;
      if (opt.decomposition) {
        const Mat g = model.field.jump_term().gradient(jr.time, s.x_left, jr.mark);
        jr.dM = determinant(Mat::Identity(model.dim(), model.dim()) + g) - 1.0;
      }
      traj.jumps.push_back(std::move(jr));
    }
    record(traj, s, noise.time_grid[i + 1], opt);
  }
  traj.dM_bound_violations = s.dM_bound_violations;
  traj.max_abs_dM = s.max_abs_dM;
  return traj;
}

Trajectory variational_jacobian(const SdeModel& model, const NoisePath& noise, const Vec& x0,
                                SchemeOptions options) {
  options.jacobian = true;
  return simulate_flow(model, noise, x0, options);
}

Trajectory determinant_decomposition(const SdeModel& model, const NoisePath& noise, const Vec& x0,
                                     SchemeOptions options) {
  options.jacobian = true;
  options.decomposition = true;
  return simulate_flow(model, noise, x0, options);
}

double backward_ratio(const Vec& x, const Vec& X, double det_J) {
  const int d = static_cast<int>(x.size());
  return std::pow((1.0 + x.squaredNorm()) / (1.0 + X.squaredNorm()), d) * det_J;
}

double forward_ratio_affine(const Mat& M, const Vec& c, const Vec& x) {
  const Vec pre = M.fullPivLu().solve(x - c);
  return 1.0 / backward_ratio(pre, x, determinant(M));
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.states.empty()) return;
  const int d = static_cast<int>(traj.states.front().size());
  out << "t";
  for (int i = 0; i < d; ++i) out << ",x" << i + 1;
  out << ",det_direct,det_explicit,A1,A2,Mc,Md\n";
  const auto& dd = traj.decomposition;
  const bool has_dec = dd.A1.size() == traj.times.size();
  const bool has_jac = traj.jacobians.size() == traj.times.size();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << fmt::format("{:.17g}", traj.times[i]);
    for (int k = 0; k < d; ++k) out << fmt::format(",{:.17g}", traj.states[i][k]);
    const double direct = has_dec ? dd.det_direct[i] : (has_jac ? determinant(traj.jacobians[i]) : NAN);
    out << fmt::format(",{:.17g}", direct);
    if (has_dec)
      out << fmt::format(",{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", dd.det_explicit[i], dd.A1[i],
                         dd.A2[i], dd.Mc[i], dd.Md[i]);
    else
      out << ",nan,nan,nan,nan,nan\n";
  }
}

}  // namespace flowjump
