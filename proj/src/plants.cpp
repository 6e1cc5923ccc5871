#include "activekoop/plants.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace activekoop {

namespace {

Vec sample_uniform(std::uint64_t seed, const std::vector<Range>& ranges, int n) {
  if (ranges.empty()) {
    throw InvalidArgument("sample_initial: empty range list");
  }
  if (ranges.size() != 1 && static_cast<int>(ranges.size()) != n) {
    throw ContractViolation("sample_initial: expected 1 or " + std::to_string(n) + " ranges, got " +
                            std::to_string(ranges.size()));
  }
  std::mt19937_64 rng(seed);
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const auto [lo, hi] = ranges.size() == 1 ? ranges[0] : ranges[static_cast<std::size_t>(i)];
    if (!(lo <= hi)) {
      throw InvalidArgument("sample_initial: range lower bound exceeds upper bound");
    }
    if (lo == hi) {
      out[i] = lo;
      continue;
    }
    std::uniform_real_distribution<double> dist(lo, hi);
    out[i] = dist(rng);
  }
  return out;
}

}  // namespace

void Plant::set_saturation(Vec s) {
  require_size(s, control_dim(), "saturation");
  saturation_ = std::move(s);
}

void Plant::check_dims(const Vec& x, const Vec& u) const {
  require_size(x, state_dim(), "plant state");
  require_size(u, control_dim(), "plant control");
}

PlantState Plant::step(const PlantState& s, const Vec& u, double ts) const {
  if (!(ts > 0.0)) {
    throw InvalidArgument("step: ts must be positive");
  }
  check_dims(s.x, u);
  PlantState next = s;
  next.x = rk4_step([&](const Vec& x) { return derivative(x, u); }, s.x, ts);
  if (!next.x.allFinite()) {
    throw IntegrationBlowup(name() + ": non-finite state after step", next.x);
  }
  return next;
}

PlantState Plant::make_state(const Vec& x) const {
  require_size(x, state_dim(), "plant state");
  PlantState s;
  s.x = x;
  return s;
}

PlantState Plant::sample_initial(std::uint64_t seed, const std::vector<Range>& ranges) const {
  return make_state(sample_uniform(seed, ranges, state_dim()));
}

// ---------------------------------------------------------------- VanDerPol

VanDerPol::VanDerPol(double mu, double ts)
    : Plant(Vec::Constant(1, std::numeric_limits<double>::infinity()), ts), mu_(mu) {}

Vec VanDerPol::derivative(const Vec& x, const Vec& u) const {
  check_dims(x, u);
  Vec dx(2);
  dx[0] = x[1];
  dx[1] = -x[0] + mu_ * (1.0 - x[0] * x[0]) * x[1] + u[0];
  return dx;
}

Mat VanDerPol::state_jacobian(const Vec& x) const {
  Mat J(2, 2);
  J << 0.0, 1.0, -1.0 - 2.0 * mu_ * x[0] * x[1], mu_ * (1.0 - x[0] * x[0]);
  return J;
}

Mat VanDerPol::control_jacobian() const {
  Mat B(2, 1);
  B << 0.0, 1.0;
  return B;
}

// -------------------------------------------------------------- LinearPlant

LinearPlant::LinearPlant(Mat A, Mat B, double ts)
    : Plant(Vec::Constant(B.cols(), std::numeric_limits<double>::infinity()), ts),
      A_(std::move(A)),
      B_(std::move(B)) {
  if (A_.rows() != A_.cols() || B_.rows() != A_.rows()) {
    throw ContractViolation("LinearPlant: inconsistent A/B shapes");
  }
}

Vec LinearPlant::derivative(const Vec& x, const Vec& u) const {
  check_dims(x, u);
  return A_ * x + B_ * u;
}

// --------------------------------------------------------------- Quadcopter

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& R) {
  Eigen::Matrix3d Q;
  Eigen::Vector3d c0 = R.col(0).normalized();
  Eigen::Vector3d c1 = R.col(1) - c0.dot(R.col(1)) * c0;
  c1.normalize();
  Eigen::Vector3d c2 = R.col(2) - c0.dot(R.col(2)) * c0 - c1.dot(R.col(2)) * c1;
  c2.normalize();
  Q.col(0) = c0;
  Q.col(1) = c1;
  Q.col(2) = c2;
  return Q;
}

Quadcopter::Quadcopter(QuadParams params, double ts, double saturation)
    : Plant(Vec::Constant(4, saturation), ts), params_(std::move(params)) {
  if (!(params_.mass > 0.0)) {
    throw InvalidArgument("Quadcopter: mass must be positive");
  }
  Eigen::LLT<Eigen::Matrix3d> llt(params_.inertia);
  if (llt.info() != Eigen::Success || !params_.inertia.isApprox(params_.inertia.transpose())) {
    throw InvalidArgument("Quadcopter: inertia must be symmetric positive definite");
  }
  inertia_inv_ = params_.inertia.inverse();
}

double Quadcopter::thrust(const Vec& u) const { return params_.k_thrust * u.sum(); }

Eigen::Vector3d Quadcopter::body_moment(const Vec& u) const {
  const double kl = params_.k_thrust * params_.arm_length;
  return {kl * (u[1] - u[3]), kl * (u[2] - u[0]), params_.k_moment * (u[0] - u[1] + u[2] - u[3])};
}

double Quadcopter::hover_command() const {
  return params_.mass * params_.gravity / (4.0 * params_.k_thrust);
}

Eigen::Vector3d Quadcopter::angular_acceleration(const Eigen::Vector3d& w, const Vec& u) const {
  const Eigen::Vector3d Jw = params_.inertia * w;
  const Eigen::Vector3d gyro = params_.reverse_gyroscopic ? Eigen::Vector3d(w.cross(Jw))
                                                          : Eigen::Vector3d(Jw.cross(w));
  return inertia_inv_ * (body_moment(u) + gyro);
}

Vec Quadcopter::derivative(const Vec& x, const Vec& u) const {
  check_dims(x, u);
  const Eigen::Vector3d ag = x.segment<3>(0);
  const Eigen::Vector3d w = x.segment<3>(3);
  const Eigen::Vector3d v = x.segment<3>(6);
  Vec dx(9);
  dx.segment<3>(0) = ag.cross(w);
  dx.segment<3>(3) = angular_acceleration(w, u);
  dx.segment<3>(6) = thrust(u) / params_.mass * Eigen::Vector3d::UnitZ() - w.cross(v) - ag;
  return dx;
}

PlantState Quadcopter::step(const PlantState& s, const Vec& u, double ts) const {
  if (!(ts > 0.0)) {
    throw InvalidArgument("step: ts must be positive");
  }
  check_dims(s.x, u);
  // Internal integration state: [vec(R) (column-major), p, ω, v].
  Eigen::Matrix<double, 18, 1> y;
  y.segment<9>(0) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(s.R.data());
  y.segment<3>(9) = s.p;
  y.segment<3>(12) = s.x.segment<3>(3);
  y.segment<3>(15) = s.x.segment<3>(6);

  const double g = params_.gravity;
  const double F = thrust(u);
  auto rhs = [&](const Eigen::Matrix<double, 18, 1>& q) {
    const Eigen::Map<const Eigen::Matrix3d> R(q.data());
    const Eigen::Vector3d w = q.segment<3>(12);
    const Eigen::Vector3d v = q.segment<3>(15);
    Eigen::Matrix<double, 18, 1> dq;
    const Eigen::Matrix3d dR = R * hat(w);
    dq.segment<9>(0) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(dR.data());
    dq.segment<3>(9) = R * v;
    dq.segment<3>(12) = angular_acceleration(w, u);
    dq.segment<3>(15) = F / params_.mass * Eigen::Vector3d::UnitZ() - w.cross(v) -
                        g * R.transpose() * Eigen::Vector3d::UnitZ();
    return dq;
  };
  const Eigen::Matrix<double, 18, 1> y1 = rk4_step(rhs, y, ts);

  PlantState next;
  next.R = orthonormalize(Eigen::Map<const Eigen::Matrix3d>(y1.data()));
  next.p = y1.segment<3>(9);
  next.x.resize(9);
  next.x.segment<3>(0) = g * next.R.transpose() * Eigen::Vector3d::UnitZ();
  next.x.segment<3>(3) = y1.segment<3>(12);
  next.x.segment<3>(6) = y1.segment<3>(15);
  if (!y1.allFinite() || !next.x.allFinite()) {
    throw IntegrationBlowup("quadcopter: non-finite state after step", next.x);
  }
  return next;
}

PlantState Quadcopter::make_state(const Vec& x) const {
  require_size(x, 9, "quadcopter state");
  PlantState s;
  s.x = x;
  const Eigen::Vector3d ag = x.segment<3>(0);
  if (ag.norm() > 0.0) {
    // Rows of R: r3 = a_g/|a_g| (so that Rᵀ e3 ∝ a_g), zero yaw otherwise.
    const Eigen::Vector3d r3 = ag.normalized();
    Eigen::Vector3d r1 = Eigen::Vector3d::UnitX() - r3.x() * r3;
    if (r1.norm() < 1e-9) {
      r1 = Eigen::Vector3d::UnitY() - r3.y() * r3;
    }
    r1.normalize();
    const Eigen::Vector3d r2 = r3.cross(r1);
    s.R.row(0) = r1.transpose();
    s.R.row(1) = r2.transpose();
    s.R.row(2) = r3.transpose();
    s.x.segment<3>(0) = params_.gravity * r3;
  }
  return s;
}

PlantState Quadcopter::sample_initial(std::uint64_t seed, const std::vector<Range>& ranges) const {
  const Vec wv = sample_uniform(seed, ranges, 6);
  PlantState s;
  s.x = Vec::Zero(9);
  s.x[2] = params_.gravity;
  s.x.segment<6>(3) = wv;
  return s;
}

// ------------------------------------------------------------- CartPendulum

CartPendulum::CartPendulum(double ts, double force_limit) : Plant(Vec::Constant(1, force_limit), ts) {}

Vec CartPendulum::derivative(const Vec& x, const Vec& u) const {
  check_dims(x, u);
  const double th = x[0], thd = x[1];
  const double s = std::sin(th), c = std::cos(th);
  const double total = cart_mass + pole_mass;
  const double temp = (u[0] + pole_mass * half_length * thd * thd * s) / total;
  const double thdd =
      (gravity * s - c * temp) / (half_length * (4.0 / 3.0 - pole_mass * c * c / total));
  const double pdd = temp - pole_mass * half_length * thdd * c / total;
  Vec dx(4);
  dx << thd, thdd, x[3], pdd;
  return dx;
}

// --------------------------------------------------------------- TwoLinkArm

TwoLinkArm::TwoLinkArm(double ts, double torque_limit) : Plant(Vec::Constant(2, torque_limit), ts) {}

Vec TwoLinkArm::derivative(const Vec& x, const Vec& u) const {
  check_dims(x, u);
  const double q2 = x[2], qd1 = x[1], qd2 = x[3];
  const double c2 = std::cos(q2), s2 = std::sin(q2);
  Eigen::Matrix2d M;
  M(0, 0) = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2);
  M(0, 1) = m2 * (l2 * l2 + l1 * l2 * c2);
  M(1, 0) = M(0, 1);
  M(1, 1) = m2 * l2 * l2;
  const double h = m2 * l1 * l2 * s2;
  const Eigen::Vector2d bias(-h * (2.0 * qd1 * qd2 + qd2 * qd2), h * qd1 * qd1);
  const Eigen::Vector2d qdd = M.ldlt().solve(Eigen::Vector2d(u[0], u[1]) - bias);
  Vec dx(4);
  dx << qd1, qdd[0], qd2, qdd[1];
  return dx;
}

std::unique_ptr<Plant> make_plant(const std::string& name) {
  if (name == "vdp") return std::make_unique<VanDerPol>();
  if (name == "quadcopter") return std::make_unique<Quadcopter>();
  if (name == "cartpole") return std::make_unique<CartPendulum>();
  if (name == "twolink") return std::make_unique<TwoLinkArm>();
  throw InvalidArgument("unknown plant '" + name + "'");
}

}  // namespace activekoop
