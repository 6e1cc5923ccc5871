#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "activekoop/common.hpp"

namespace activekoop {

/// Plant state. `x` is the measured state the learner sees; the quadcopter
/// additionally carries its attitude `R` and world position `p`.
struct PlantState {
  Vec x;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

using Range = std::pair<double, double>;

class Plant {
 public:
  virtual ~Plant() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

  /// Time derivative of the measured state. Pure in (x, u).
  virtual Vec derivative(const Vec& x, const Vec& u) const = 0;

  /// Advances by one zero-order-hold interval with fixed-step RK4.
  virtual PlantState step(const PlantState& s, const Vec& u, double ts) const;

  /// Builds a full state from a measured vector (quadcopter: attitude is
  /// recovered only up to yaw, which the measurement does not observe).
  virtual PlantState make_state(const Vec& x) const;

  /// Deterministic uniform sample. `ranges` has one entry per sampled
  /// channel, or a single entry broadcast to all of them.
  virtual PlantState sample_initial(std::uint64_t seed, const std::vector<Range>& ranges) const;

  const Vec& saturation() const { return saturation_; }
  void set_saturation(Vec s);
  double sample_time() const { return sample_time_; }
  void set_sample_time(double ts) { sample_time_ = ts; }

  Vec clamp(const Vec& u) const { return clamp_symmetric(u, saturation_); }

 protected:
  Plant(Vec saturation, double sample_time)
      : saturation_(std::move(saturation)), sample_time_(sample_time) {}
  void check_dims(const Vec& x, const Vec& u) const;

  Vec saturation_;
  double sample_time_;
};

/// Forced Van der Pol oscillator, x = [x1, x2].
class VanDerPol final : public Plant {
 public:
  explicit VanDerPol(double mu = 1.0, double ts = 0.01);
  std::string name() const override { return "vdp"; }
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  Vec derivative(const Vec& x, const Vec& u) const override;

  /// Jacobians of the dynamics at (x, u).
  Mat state_jacobian(const Vec& x) const;
  Mat control_jacobian() const;
  double mu() const { return mu_; }

 private:
  double mu_;
};

/// ẋ = A x + B u. Used by tests and the identity-dictionary checks.
class LinearPlant final : public Plant {
 public:
  LinearPlant(Mat A, Mat B, double ts = 0.01);
  std::string name() const override { return "linear"; }
  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  Vec derivative(const Vec& x, const Vec& u) const override;
  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }

 private:
  Mat A_, B_;
};

struct QuadParams {
  double mass = 0.6;
  Eigen::Matrix3d inertia = Eigen::Vector3d(0.04, 0.04, 0.07).asDiagonal();
  double k_thrust = 1.0;
  double k_moment = 0.025;
  double arm_length = 0.2;
  double gravity = 9.81;
  /// false: J ω̇ = M + (Jω) × ω. true: J ω̇ = M + ω × (Jω).
  bool reverse_gyroscopic = false;
};

/// Quadcopter on SE(3) with bidirectional rotor thrust. Measured state is
/// [a_g, ω, v] with a_g = g Rᵀ e3 the body-frame gravity vector.
class Quadcopter final : public Plant {
 public:
  explicit Quadcopter(QuadParams params = {}, double ts = 0.005, double saturation = 6.0);
  std::string name() const override { return "quadcopter"; }
  int state_dim() const override { return 9; }
  int control_dim() const override { return 4; }
  Vec derivative(const Vec& x, const Vec& u) const override;
  PlantState step(const PlantState& s, const Vec& u, double ts) const override;
  PlantState make_state(const Vec& x) const override;
  /// Samples ω and v (6 channels); attitude starts at identity.
  PlantState sample_initial(std::uint64_t seed, const std::vector<Range>& ranges) const override;

  const QuadParams& params() const { return params_; }
  Eigen::Vector3d body_moment(const Vec& u) const;
  double thrust(const Vec& u) const;
  /// Per-rotor command that balances gravity when level.
  double hover_command() const;
  Eigen::Vector3d angular_acceleration(const Eigen::Vector3d& w, const Vec& u) const;

 private:
  QuadParams params_;
  Eigen::Matrix3d inertia_inv_;
};

/// Frictionless cart-pole, x = [θ, θ̇, p, ṗ] with θ = 0 upright.
class CartPendulum final : public Plant {
 public:
  CartPendulum(double ts = 0.02, double force_limit = 10.0);
  std::string name() const override { return "cartpole"; }
  int state_dim() const override { return 4; }
  int control_dim() const override { return 1; }
  Vec derivative(const Vec& x, const Vec& u) const override;

  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double gravity = 9.81;
};

/// Planar two-link arm in the horizontal plane, point masses at the link
/// tips, x = [θ1, θ̇1, θ2, θ̇2].
class TwoLinkArm final : public Plant {
 public:
  TwoLinkArm(double ts = 0.01, double torque_limit = 10.0);
  std::string name() const override { return "twolink"; }
  int state_dim() const override { return 4; }
  int control_dim() const override { return 2; }
  Vec derivative(const Vec& x, const Vec& u) const override;

  double m1 = 1.0, m2 = 1.0, l1 = 1.0, l2 = 1.0;
};

Eigen::Matrix3d hat(const Eigen::Vector3d& w);

/// Gram-Schmidt on the columns of R.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& R);

std::unique_ptr<Plant> make_plant(const std::string& name);

}  // namespace activekoop
