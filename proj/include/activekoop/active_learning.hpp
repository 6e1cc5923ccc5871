#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "activekoop/common.hpp"
#include "activekoop/koopman.hpp"
#include "activekoop/lqr.hpp"
#include "activekoop/observables.hpp"

namespace activekoop {

/// tr(Σ⁻¹)(‖z‖² + ‖v‖²): the trace of the Fisher information of the linear
/// lifted model with respect to every entry of [K_x K_u].
double fisher_trace(const Vec& z, const Vec& v, const Mat& Sigma);

/// Running cost ℓ = w/(𝕴 + ε) + (z - z_d)ᵀQ̃(z - z_d) + (u - u_ref)ᵀR(u - u_ref)
/// and terminal cost m = (z - z_d)ᵀQ̃_f(z - z_d).
struct CostModel {
  Mat Qt, R, Qft;
  Vec z_target, u_ref;
  double w_info = 0.0;
  double eps = 1e-6;
  double sigma_inv_trace = 0.0;

  struct Eval {
    double value = 0.0;
    Vec dz, du;
  };

  double info(const Vec& z, const Vec& v) const;
  double task(const Vec& z, const Vec& u) const;
  double value(const Vec& z, const Vec& u, const Vec& v) const;
  /// Gradients hold u fixed in ∂/∂z; ∂/∂u goes through v via dv_du.
  Eval eval(const Vec& z, const Vec& u, const Vec& v, const Mat& dv_du) const;
  double terminal(const Vec& z) const;
  Vec terminal_grad(const Vec& z) const;
};

CostModel make_cost(const Mat& Qt, const Mat& R, const Mat& Qft, const Vec& z_target,
                    const Vec& u_ref, double w_info, double eps, const Mat& Sigma);

/// Lifted dynamics f(z, u) = K_x z + K_u v(x(z), u).
struct LiftedDynamics {
  const KoopmanModel& model;
  const Dictionary& dict;

  Vec v(const Vec& z, const Vec& u) const;
  Mat dv_du(const Vec& z, const Vec& u) const;
  Vec f(const Vec& z, const Vec& u) const;
  /// ∂f/∂u = K_u ∂v/∂u.
  Mat B(const Vec& z, const Vec& u) const;
};

struct HorizonTrajectory {
  double ts = 0.0;
  std::vector<Vec> z, u, v;
  std::size_t size() const { return z.size(); }
};

struct AdjointTrajectory {
  std::vector<Vec> rho;
};

/// RK4 over round(T/ts) steps with u = μ(z) evaluated at every stage.
HorizonTrajectory simulate_forward(const LiftedDynamics& sys, const LqPolicy& policy,
                                   const Vec& z0, double horizon);

/// Backward RK4 of the costate from ρ(T) = ∂m/∂z, with z between grid
/// points taken from cubic Hermite interpolation.
AdjointTrajectory simulate_adjoint(const HorizonTrajectory& traj, const LiftedDynamics& sys,
                                   const LqPolicy& policy, const CostModel& cost);

double mode_insertion_gradient(const Vec& rho, const Vec& f2, const Vec& f1);

/// μ⋆ = μ(z) - R̃⁻¹ (K_u ∂v/∂u)ᵀ ρ on the grid; clamped when `clamp`.
std::vector<Vec> mu_star(const HorizonTrajectory& traj, const AdjointTrajectory& adj,
                         const LiftedDynamics& sys, const Mat& R_tilde, const LqPolicy& policy,
                         bool clamp = true);

/// ‖(K_u ∂v/∂u)ᵀ ρ‖²_{R̃⁻¹}.
double insertion_norm(const Vec& rho, const Mat& B, const Mat& R_tilde);

/// Constant control `u` applied on [tau, tau + lambda).
struct Insertion {
  double tau = 0.0;
  double lambda = 0.0;
  Vec u;
};

/// J = ∫ ℓ(z, μ(z)) dt + m(z(T)) along the rollout, with the running cost
/// always evaluated at the policy so that its sensitivity to an insertion is
/// carried by z alone.
double objective(const LiftedDynamics& sys, const LqPolicy& policy, const CostModel& cost,
                 const Vec& z0, double horizon, const Insertion* insertion = nullptr);

/// First-order information change (norm + Δℓ_task) 𝕴⋆ 𝕴_μ.
double delta_information(double insertion_norm_value, double task_star, double task_mu,
                         double info_star, double info_mu);

struct LearnerConfig {
  Mat Q, R, Qf;  // plant-state weights; Qf empty means Q
  Vec x_target;
  Mat R_tilde;
  double w_info = 0.1;
  double eps = 1e-6;
  double sigma_scale = 1.0;  // Σ = sigma_scale · I
  double horizon = 0.1;
  double init_sigma = 1.0;
  int min_samples = -1;  // < 0 means c_x + c_u
  double ridge = 1e-9;
  bool feedforward = true;
  /// Fixed reference input; when set it replaces the model feedforward.
  std::optional<Vec> u_ref;
  /// Seconds; > 0 caps the backward Riccati flow, giving the finite-horizon
  /// gain when the lifted model is not stabilizable.
  double lqr_horizon = 0.0;
  std::uint64_t seed = 0;
};

enum class ControlMode { Active, Policy, Forced };

struct StepLog {
  double info = 0.0;
  double task_cost = 0.0;
  double mig = 0.0;
  double delta_info = 0.0;
  bool saturated = false;
  bool zero_policy = false;
  bool horizon_shortened = false;
  /// Negativity of the insertion gradient was lost to clamping.
  bool clamp_violation = false;
};

/// The sample-refit-synthesize-act loop: one call per sampling instant.
class ActiveLearner {
 public:
  ActiveLearner(const Dictionary& dict, Vec saturation, double ts, LearnerConfig cfg);

  /// Consumes x(t_i), returns the control to hold over [t_i, t_i + ts).
  Vec step(const Vec& x, ControlMode mode, const Vec& forced = Vec());

  void set_learning(bool on) { learning_ = on; }
  bool learning() const { return learning_; }
  void set_w_info(double w) { cfg_.w_info = w; }
  /// Replaces the model and stops switching to the fitted estimate.
  void set_model(const KoopmanModel& model);

  const KoopmanModel& model() const { return model_; }
  const LqPolicy& policy() const { return policy_; }
  const MomentPair& moments() const { return moments_; }
  const StepLog& last_log() const { return log_; }
  const Vec& z_target() const { return z_target_; }

 private:
  void refresh_policy();
  Vec active_control(const Vec& z, StepLog& log);

  const Dictionary& dict_;
  Vec saturation_;
  double ts_;
  LearnerConfig cfg_;
  Mat Qt_, Qft_, Sigma_;
  Vec z_target_;
  std::mt19937_64 rng_;
  MomentPair moments_;
  KoopmanModel model_;
  LqPolicy policy_;
  bool policy_stale_ = true;
  bool zero_policy_ = false;
  bool fixed_model_ = false;
  bool learning_ = true;
  std::optional<Vec> prev_x_, prev_u_;
  StepLog log_;
};

}  // namespace activekoop
