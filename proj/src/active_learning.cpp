#include "activekoop/active_learning.hpp"

#include <algorithm>
#include <cmath>

namespace activekoop {

double fisher_trace(const Vec& z, const Vec& v, const Mat& Sigma) {
  require_size(z, Sigma.rows(), "fisher: z");
  const double tr = Sigma.ldlt().solve(Mat::Identity(Sigma.rows(), Sigma.cols())).trace();
  return tr * (z.squaredNorm() + v.squaredNorm());
}

double CostModel::info(const Vec& z, const Vec& v) const {
  return sigma_inv_trace * (z.squaredNorm() + v.squaredNorm());
}

double CostModel::task(const Vec& z, const Vec& u) const {
  const Vec dz = z - z_target;
  const Vec du = u - u_ref;
  return dz.dot(Qt * dz) + du.dot(R * du);
}

double CostModel::value(const Vec& z, const Vec& u, const Vec& v) const {
  double l = task(z, u);
  if (w_info != 0.0) l += w_info / (info(z, v) + eps);
  return l;
}

CostModel::Eval CostModel::eval(const Vec& z, const Vec& u, const Vec& v, const Mat& dv_du) const {
  Eval e;
  const Vec dz = z - z_target;
  const Vec du = u - u_ref;
  e.value = dz.dot(Qt * dz) + du.dot(R * du);
  e.dz = 2.0 * (Qt * dz);
  e.du = 2.0 * (R * du);
  if (w_info != 0.0) {
    const double d = info(z, v) + eps;
    e.value += w_info / d;
    const double g = -w_info / (d * d) * 2.0 * sigma_inv_trace;
    e.dz += g * z;
    e.du += g * (dv_du.transpose() * v);
  }
  return e;
}

double CostModel::terminal(const Vec& z) const {
  const Vec dz = z - z_target;
  return dz.dot(Qft * dz);
}

Vec CostModel::terminal_grad(const Vec& z) const { return 2.0 * (Qft * (z - z_target)); }

CostModel make_cost(const Mat& Qt, const Mat& R, const Mat& Qft, const Vec& z_target,
                    const Vec& u_ref, double w_info, double eps, const Mat& Sigma) {
  CostModel c;
  c.Qt = Qt;
  c.R = R;
  c.Qft = Qft.size() == 0 ? Qt : Qft;
  c.z_target = z_target;
  c.u_ref = u_ref;
  c.w_info = w_info;
  c.eps = eps;
  c.sigma_inv_trace = Sigma.ldlt().solve(Mat::Identity(Sigma.rows(), Sigma.cols())).trace();
  return c;
}

Vec LiftedDynamics::v(const Vec& z, const Vec& u) const {
  if (dict.identity_control()) return u;
  return dict.lift_control(dict.recover_state(z), u);
}

Mat LiftedDynamics::dv_du(const Vec& z, const Vec& u) const {
  if (dict.identity_control()) return Mat::Identity(u.size(), u.size());
  return dict.control_jacobian(dict.recover_state(z), u);
}

Vec LiftedDynamics::f(const Vec& z, const Vec& u) const {
  return model.Kx * z + model.Ku * v(z, u);
}

Mat LiftedDynamics::B(const Vec& z, const Vec& u) const {
  if (dict.identity_control()) return model.Ku;
  return model.Ku * dv_du(z, u);
}

namespace {

int horizon_steps(double horizon, double ts) {
  if (!(ts > 0.0) || !(horizon > 0.0)) throw InvalidArgument("horizon and ts must be positive");
  const double r = horizon / ts;
  const long n = std::lround(r);
  if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-6) {
    throw InvalidArgument("horizon must be a multiple of the sampling interval");
  }
  return static_cast<int>(n);
}

}  // namespace

HorizonTrajectory simulate_forward(const LiftedDynamics& sys, const LqPolicy& policy,
                                   const Vec& z0, double horizon) {
  require_size(z0, sys.model.cx, "forward: z0");
  const double ts = sys.model.ts;
  const int n = horizon_steps(horizon, ts);
  HorizonTrajectory tr;
  tr.ts = ts;
  tr.z.reserve(n + 1);
  tr.z.push_back(z0);
  auto rhs = [&](const Vec& z) { return sys.f(z, policy(z)); };
  for (int k = 0; k < n; ++k) {
    Vec next = rk4_step(rhs, tr.z.back(), ts);
    if (!next.allFinite()) {
      throw HorizonDivergence("forward rollout diverged at step " + std::to_string(k + 1));
    }
    tr.z.push_back(std::move(next));
  }
  tr.u.reserve(n + 1);
  tr.v.reserve(n + 1);
  for (const Vec& z : tr.z) {
    tr.u.push_back(policy(z));
    tr.v.push_back(sys.v(z, tr.u.back()));
  }
  return tr;
}

namespace {

// ρ̇ = a(z) - M(z)ᵀ ρ at a fixed z.
struct CostateField {
  Vec a;
  Mat Mt;
};

CostateField costate_field(const Vec& z, const LiftedDynamics& sys, const LqPolicy& policy,
                           const CostModel& cost) {
  const Vec u = policy(z);
  const Vec v = sys.v(z, u);
  const Mat dvdu = sys.dv_du(z, u);
  const Mat mu_z = policy.jacobian(z);
  const CostModel::Eval e = cost.eval(z, u, v, dvdu);
  CostateField out;
  out.a = -(e.dz + mu_z.transpose() * e.du);
  out.Mt = (sys.model.Kx + sys.model.Ku * dvdu * mu_z).transpose();
  return out;
}

}  // namespace

AdjointTrajectory simulate_adjoint(const HorizonTrajectory& traj, const LiftedDynamics& sys,
                                   const LqPolicy& policy, const CostModel& cost) {
  const std::size_t n = traj.size();
  if (n == 0) throw ContractViolation("adjoint: empty trajectory");
  const double h = traj.ts;
  AdjointTrajectory adj;
  adj.rho.resize(n);
  adj.rho[n - 1] = cost.terminal_grad(traj.z[n - 1]);

  std::vector<Vec> zdot(n);
  for (std::size_t k = 0; k < n; ++k) zdot[k] = sys.f(traj.z[k], traj.u[k]);

  CostateField right = costate_field(traj.z[n - 1], sys, policy, cost);
  for (std::size_t k = n - 1; k-- > 0;) {
    const Vec zm = 0.5 * (traj.z[k] + traj.z[k + 1]) + (h / 8.0) * (zdot[k] - zdot[k + 1]);
    const CostateField mid = costate_field(zm, sys, policy, cost);
    const CostateField left = costate_field(traj.z[k], sys, policy, cost);
    const Vec& r = adj.rho[k + 1];
    const Vec k1 = right.a - right.Mt * r;
    const Vec k2 = mid.a - mid.Mt * (r - 0.5 * h * k1);
    const Vec k3 = mid.a - mid.Mt * (r - 0.5 * h * k2);
    const Vec k4 = left.a - left.Mt * (r - h * k3);
    adj.rho[k] = r - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    right = left;
  }
  return adj;
}

double mode_insertion_gradient(const Vec& rho, const Vec& f2, const Vec& f1) {
  require_size(f2, rho.size(), "mode insertion: f2");
  require_size(f1, rho.size(), "mode insertion: f1");
  return rho.dot(f2 - f1);
}

std::vector<Vec> mu_star(const HorizonTrajectory& traj, const AdjointTrajectory& adj,
                         const LiftedDynamics& sys, const Mat& R_tilde, const LqPolicy& policy,
                         bool clamp) {
  if (adj.rho.size() != traj.size()) throw ContractViolation("mu_star: grid mismatch");
  const auto Rt = R_tilde.ldlt();
  std::vector<Vec> out;
  out.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Mat B = sys.B(traj.z[k], traj.u[k]);
    Vec u = traj.u[k] - Rt.solve(B.transpose() * adj.rho[k]);
    if (clamp) u = clamp_symmetric(u, policy.saturation);
    out.push_back(std::move(u));
  }
  return out;
}

double insertion_norm(const Vec& rho, const Mat& B, const Mat& R_tilde) {
  const Vec g = B.transpose() * rho;
  return g.dot(R_tilde.ldlt().solve(g));
}

double objective(const LiftedDynamics& sys, const LqPolicy& policy, const CostModel& cost,
                 const Vec& z0, double horizon, const Insertion* insertion) {
  const double ts = sys.model.ts;
  const int n = horizon_steps(horizon, ts);
  std::vector<double> knots;
  for (int k = 0; k <= n; ++k) knots.push_back(k * ts);
  double a = 0.0, b = 0.0;
  if (insertion) {
    a = insertion->tau;
    b = insertion->tau + insertion->lambda;
    if (a < 0.0 || b > n * ts + 1e-12) throw InvalidArgument("objective: insertion outside horizon");
    knots.push_back(a);
    knots.push_back(b);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  }
  const Eigen::Index cx = z0.size();
  Vec y(cx + 1);
  y << z0, 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double t0 = knots[k], t1 = knots[k + 1];
    const bool inserted = insertion && t0 >= a && t1 <= b && b > a;
    auto rhs = [&](const Vec& s) {
      const Vec z = s.head(cx);
      const Vec u_pol = policy(z);
      Vec d(cx + 1);
      d.head(cx) = sys.f(z, inserted ? insertion->u : u_pol);
      d[cx] = cost.value(z, u_pol, sys.v(z, u_pol));
      return d;
    };
    y = rk4_step(rhs, y, t1 - t0);
  }
  return y[cx] + cost.terminal(y.head(cx));
}

double delta_information(double insertion_norm_value, double task_star, double task_mu,
                         double info_star, double info_mu) {
  return (insertion_norm_value + task_star - task_mu) * info_star * info_mu;
}

// ------------------------------------------------------------------ Learner

ActiveLearner::ActiveLearner(const Dictionary& dict, Vec saturation, double ts, LearnerConfig cfg)
    : dict_(dict), saturation_(std::move(saturation)), ts_(ts), cfg_(std::move(cfg)),
      rng_(cfg_.seed) {
  const int n = dict_.state_dim(), m = dict_.control_dim();
  const int cx = dict_.lifted_dim(), cu = dict_.control_obs_dim();
  require_size(saturation_, m, "learner: saturation");
  require_size(cfg_.x_target, n, "learner: x_target");
  if (cfg_.u_ref) require_size(*cfg_.u_ref, dict_.control_dim(), "learner: u_ref");
  if (cfg_.Q.rows() != n || cfg_.R.rows() != m || cfg_.R_tilde.rows() != m) {
    throw ContractViolation("learner: weight dimensions do not match the dictionary");
  }
  Qt_ = expand_weights(cfg_.Q, cx);
  Qft_ = expand_weights(cfg_.Qf.size() == 0 ? cfg_.Q : cfg_.Qf, cx);
  Sigma_ = cfg_.sigma_scale * Mat::Identity(cx, cx);
  z_target_ = dict_.lift(cfg_.x_target);
  if (cfg_.min_samples < 0) cfg_.min_samples = cx + cu;
  moments_ = MomentPair(cx + cu);
  model_ = random_model(cx, cu, ts_, cfg_.init_sigma, rng_);
}

void ActiveLearner::set_model(const KoopmanModel& model) {
  if (model.cx != dict_.lifted_dim() || model.cu != dict_.control_obs_dim()) {
    throw ContractViolation("learner: model dimensions do not match the dictionary");
  }
  model_ = model;
  fixed_model_ = true;
  policy_stale_ = true;
}

void ActiveLearner::refresh_policy() {
  const LiftedDynamics sys{model_, dict_};
  const int m = dict_.control_dim();
  const Vec u0 = Vec::Zero(m);
  const Mat B = sys.B(z_target_, u0);
  Vec u_ref = Vec::Zero(m);
  if (cfg_.u_ref) {
    u_ref = clamp_symmetric(*cfg_.u_ref, saturation_);
  } else if (cfg_.feedforward && model_.Kx.allFinite() && B.allFinite()) {
    const Vec drift = model_.Kx * z_target_ + model_.Ku * sys.v(z_target_, u0);
    u_ref = clamp_symmetric(feedforward_for_target(drift, B, Qt_), saturation_);
  }
  zero_policy_ = false;
  try {
    LqrOptions opt;
    opt.step = ts_;
    if (cfg_.lqr_horizon > 0.0) opt.horizon_cap = cfg_.lqr_horizon / ts_;
    policy_ = solve_lqr(model_.Kx, B, Qt_, cfg_.R, z_target_, u_ref, saturation_, Qft_, opt);
  } catch (const UnstabilizableModel&) {
    policy_ = zero_policy(dict_.lifted_dim(), u_ref, saturation_);
    zero_policy_ = true;
  }
  policy_stale_ = false;
}

Vec ActiveLearner::step(const Vec& x, ControlMode mode, const Vec& forced) {
  require_size(x, dict_.state_dim(), "learner: x");
  if (learning_ && prev_x_) {
    const Vec z0 = dict_.lift_full(*prev_x_, *prev_u_);
    const Vec z1 = dict_.lift_full(x, *prev_u_);
    moments_.accumulate(z0, z1);
    if (!fixed_model_ && moments_.count() >= cfg_.min_samples) {
      try {
        model_ = fit_model(moments_, dict_.lifted_dim(), dict_.control_obs_dim(), ts_, cfg_.ridge);
        policy_stale_ = true;
      } catch (const DegenerateData&) {
      }
    }
  }
  if (policy_stale_) refresh_policy();

  const Vec z = dict_.lift(x);
  log_ = StepLog{};
  log_.zero_policy = zero_policy_;
  Vec u;
  switch (mode) {
    case ControlMode::Forced:
      require_size(forced, dict_.control_dim(), "learner: forced control");
      u = clamp_symmetric(forced, saturation_);
      log_.saturated = (u.array() != forced.array()).any();
      break;
    case ControlMode::Policy:
      u = policy_(z, &log_.saturated);
      break;
    case ControlMode::Active:
      u = active_control(z, log_);
      break;
  }
  const LiftedDynamics sys{model_, dict_};
  log_.info = fisher_trace(z, sys.v(z, u), Sigma_);
  const Vec dz = z - z_target_;
  const Vec du = u - policy_.u_ref;
  log_.task_cost = dz.dot(Qt_ * dz) + du.dot(cfg_.R * du);
  prev_x_ = x;
  prev_u_ = u;
  return u;
}

Vec ActiveLearner::active_control(const Vec& z, StepLog& log) {
  const LiftedDynamics sys{model_, dict_};
  const CostModel cost = make_cost(Qt_, cfg_.R, Qft_, z_target_, policy_.u_ref, cfg_.w_info,
                                   cfg_.eps, Sigma_);
  double horizon = cfg_.horizon;
  HorizonTrajectory traj;
  while (true) {
    try {
      traj = simulate_forward(sys, policy_, z, horizon);
      break;
    } catch (const HorizonDivergence&) {
      log.horizon_shortened = true;
      const int steps = static_cast<int>(std::lround(horizon / ts_)) / 2;
      if (steps < 1) return policy_(z, &log.saturated);
      horizon = steps * ts_;
    }
  }
  const AdjointTrajectory adj = simulate_adjoint(traj, sys, policy_, cost);
  const Vec& u0 = traj.u[0];
  const Vec& rho0 = adj.rho[0];
  const Mat B0 = sys.B(z, u0);
  const Vec raw = u0 - cfg_.R_tilde.ldlt().solve(B0.transpose() * rho0);
  if (!raw.allFinite()) return policy_(z, &log.saturated);
  const Vec u = clamp_symmetric(raw, saturation_);
  log.saturated = (u.array() != raw.array()).any();

  const double norm = insertion_norm(rho0, B0, cfg_.R_tilde);
  log.mig = mode_insertion_gradient(rho0, sys.f(z, u), sys.f(z, u0));
  log.clamp_violation = log.saturated && norm > 0.0 && log.mig > 1e-12;
  log.delta_info = delta_information(norm, cost.task(z, u), cost.task(z, u0),
                                     cost.info(z, sys.v(z, u)), cost.info(z, sys.v(z, u0)));
  return u;
}

}  // namespace activekoop
