#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "activekoop/active_learning.hpp"
#include "activekoop/plants.hpp"
#include "support.hpp"

using namespace activekoop;
using testsupport::randn;

namespace {

// ∂f/∂κ for f = [K_x K_u] z̃ with κ = vec([K_x K_u]) column-major.
Mat parameter_jacobian(const Vec& zt, int cx) {
  const int c = static_cast<int>(zt.size());
  Mat J = Mat::Zero(cx, cx * c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < cx; ++i) J(i, j * cx + i) = zt[j];
  }
  return J;
}

double brute_fisher(const Vec& z, const Vec& v, const Mat& Sigma) {
  Vec zt(z.size() + v.size());
  zt << z, v;
  const Mat J = parameter_jacobian(zt, static_cast<int>(z.size()));
  return (J.transpose() * Sigma.inverse() * J).trace();
}

KoopmanModel linear_model(const Mat& A, const Mat& B, double ts) {
  KoopmanModel m;
  m.cx = static_cast<int>(A.rows());
  m.cu = static_cast<int>(B.cols());
  m.ts = ts;
  m.Kx = A;
  m.Ku = B;
  m.Kc = Mat::Zero(m.cx + m.cu, m.cx + m.cu);
  m.Kc.topRows(m.cx) << A, B;
  return m;
}

Vec inf_sat(int m) { return Vec::Constant(m, std::numeric_limits<double>::infinity()); }

struct Scenario {
  KoopmanModel model;
  IdentityDictionary dict;
  LqPolicy policy;
  CostModel cost;
  Mat R_tilde;
};

Scenario random_scenario(std::mt19937_64& rng, int n, int m, double w_info) {
  const double ts = 0.01;
  const Mat A = testsupport::stable_generator(n, rng);
  const Mat B = randn(n, m, rng);
  Scenario s{linear_model(A, B, ts), IdentityDictionary(n, m), {}, {}, {}};
  const Mat Q = Mat::Identity(n, n), R = 0.5 * Mat::Identity(m, m);
  s.policy = solve_lqr(A, B, Q, R, Vec::Zero(n), Vec::Zero(m), inf_sat(m));
  s.cost = make_cost(Q, R, Mat(), Vec::Zero(n), Vec::Zero(m), w_info, 1e-3, Mat::Identity(n, n));
  s.R_tilde = 2.0 * Mat::Identity(m, m);
  return s;
}

}  // namespace

TEST_CASE("fisher trace closed form against the explicit jacobian") {
  Vec z(2), v(1);
  z << 1, 0;
  v << 1;
  CHECK(fisher_trace(z, v, Mat::Identity(2, 2)) == doctest::Approx(4.0));
  CHECK(brute_fisher(z, v, Mat::Identity(2, 2)) == doctest::Approx(4.0));
  CHECK(fisher_trace(Vec::Zero(3), Vec::Zero(2), Mat::Identity(3, 3)) == 0.0);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const int cx = 1 + i % 6, cu = 1 + i % 3;
    const Mat L = randn(cx, cx, rng);
    const Mat Sigma = L * L.transpose() + 0.5 * Mat::Identity(cx, cx);
    const Vec zz = randn(cx, rng), vv = randn(cu, rng);
    CHECK(testsupport::rel_err(fisher_trace(zz, vv, Sigma), brute_fisher(zz, vv, Sigma)) < 1e-8);
    CHECK(fisher_trace(2.5 * zz, 2.5 * vv, Sigma) ==
          doctest::Approx(6.25 * fisher_trace(zz, vv, Sigma)).epsilon(1e-12));
  }
}

TEST_CASE("running cost values and gradients") {
  std::mt19937_64 rng(2);
  const int cx = 4, m = 2;
  const Mat L = randn(cx, cx, rng);
  const Mat Qt = L * L.transpose();
  const Mat R = Mat::Identity(m, m) * 0.7;
  const Vec zd = randn(cx, rng), uref = randn(m, rng);

  const CostModel lq = make_cost(Qt, R, Mat(), zd, uref, 0.0, 1e-6, Mat::Identity(cx, cx));
  CHECK(lq.value(zd, uref, uref) == 0.0);
  const Vec z1 = randn(cx, rng), u1 = randn(m, rng);
  CHECK(lq.value(z1, u1, u1) ==
        doctest::Approx((z1 - zd).dot(Qt * (z1 - zd)) + (u1 - uref).dot(R * (u1 - uref))));

  const CostModel c = make_cost(Qt, R, Mat(), zd, uref, 0.3, 1e-2, 2.0 * Mat::Identity(cx, cx));
  const Mat I = Mat::Identity(m, m);
  for (int i = 0; i < 100; ++i) {
    const Vec z = randn(cx, rng, 0.5), u = randn(m, rng, 0.5);
    const CostModel::Eval e = c.eval(z, u, u, I);
    CHECK(e.value == doctest::Approx(c.value(z, u, u)).epsilon(1e-14));
    const double h = 1e-6;
    for (int k = 0; k < cx; ++k) {
      Vec zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      const double fd = (c.value(zp, u, u) - c.value(zm, u, u)) / (2 * h);
      CHECK(std::abs(fd - e.dz[k]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
    for (int k = 0; k < m; ++k) {
      Vec up = u, um = u;
      up[k] += h;
      um[k] -= h;
      const double fd = (c.value(z, up, up) - c.value(z, um, um)) / (2 * h);
      CHECK(std::abs(fd - e.du[k]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("forward rollout examples") {
  IdentityDictionary dict(2, 1);
  const KoopmanModel frozen = linear_model(Mat::Zero(2, 2), Mat::Zero(2, 1), 0.01);
  const LqPolicy pol = zero_policy(2, Vec::Zero(1), inf_sat(1));
  Vec z0(2);
  z0 << 0.4, -1.0;
  const HorizonTrajectory t = simulate_forward({frozen, dict}, pol, z0, 0.1);
  CHECK(t.size() == 11);
  CHECK(t.z.front() == z0);
  for (const auto& z : t.z) CHECK(z == z0);

  IdentityDictionary d1(1, 1);
  const KoopmanModel decay = linear_model(-Mat::Identity(1, 1), Mat::Zero(1, 1), 0.01);
  const LqPolicy p1 = zero_policy(1, Vec::Zero(1), inf_sat(1));
  const HorizonTrajectory t1 = simulate_forward({decay, d1}, p1, Vec::Constant(1, 2.0), 1.0);
  CHECK(t1.size() == 101);
  CHECK(std::abs(t1.z.back()[0] - 2.0 * std::exp(-1.0)) < 1e-8);
  CHECK_THROWS_AS(simulate_forward({decay, d1}, p1, Vec::Constant(1, 2.0), 0.015), InvalidArgument);
}

TEST_CASE("adjoint examples") {
  IdentityDictionary d1(1, 1);
  const double a = 0.7, T = 0.5;
  const KoopmanModel model = linear_model(Mat::Constant(1, 1, a), Mat::Zero(1, 1), 0.01);
  const LqPolicy pol = zero_policy(1, Vec::Zero(1), inf_sat(1));
  const HorizonTrajectory traj = simulate_forward({model, d1}, pol, Vec::Constant(1, 1.3), T);

  const CostModel none = make_cost(Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Zero(1),
                                   Vec::Zero(1), 0.0, 1e-6, Mat::Identity(1, 1));
  for (const auto& r : simulate_adjoint(traj, {model, d1}, pol, none).rho) CHECK(r.norm() == 0.0);

  // m = ½ z²
  const CostModel half = make_cost(Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Constant(1, 1, 0.5),
                                   Vec::Zero(1), Vec::Zero(1), 0.0, 1e-6, Mat::Identity(1, 1));
  const AdjointTrajectory adj = simulate_adjoint(traj, {model, d1}, pol, half);
  const double zT = traj.z.back()[0];
  CHECK(adj.rho.back()[0] == zT);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = k * 0.01;
    CHECK(std::abs(adj.rho[k][0] - std::exp(a * (T - t)) * zT) < 1e-9);
  }
}

TEST_CASE("mode insertion gradient by hand") {
  Vec rho(2), f2(2), f1(2);
  rho << 1, 2;
  f1 << 0.5, 0.5;
  f2 << 3.5, -0.5;
  CHECK(mode_insertion_gradient(rho, f2, f1) == doctest::Approx(1.0));
  CHECK(mode_insertion_gradient(rho, f1, f1) == 0.0);
}

TEST_CASE("mu star limits and the negativity identity") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Scenario s = random_scenario(rng, 3, 2, 0.5);
    const LiftedDynamics sys{s.model, s.dict};
    const Vec z0 = randn(3, rng);
    const HorizonTrajectory traj = simulate_forward(sys, s.policy, z0, 0.1);
    const AdjointTrajectory adj = simulate_adjoint(traj, sys, s.policy, s.cost);

    AdjointTrajectory zero = adj;
    for (auto& r : zero.rho) r.setZero();
    const auto same = mu_star(traj, zero, sys, s.R_tilde, s.policy);
    for (std::size_t k = 0; k < traj.size(); ++k) CHECK(same[k] == traj.u[k]);

    const auto stiff = mu_star(traj, adj, sys, 1e9 * s.R_tilde, s.policy);
    for (std::size_t k = 0; k < traj.size(); ++k) CHECK((stiff[k] - traj.u[k]).norm() < 1e-6);

    const auto star = mu_star(traj, adj, sys, s.R_tilde, s.policy, false);
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const Vec& z = traj.z[k];
      const double mig = mode_insertion_gradient(adj.rho[k], sys.f(z, star[k]), sys.f(z, traj.u[k]));
      const double norm = insertion_norm(adj.rho[k], sys.B(z, traj.u[k]), s.R_tilde);
      CHECK(std::abs(mig + norm) <= 1e-10 * std::max(1.0, norm));
      CHECK(mig <= 0.0);
    }
  }
}

TEST_CASE("adjoint matches finite differences of the objective") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Scenario s = random_scenario(rng, 3, 1, 0.2);
    const LiftedDynamics sys{s.model, s.dict};
    const Vec z0 = randn(3, rng);
    const double T = 0.2;
    const HorizonTrajectory traj = simulate_forward(sys, s.policy, z0, T);
    const AdjointTrajectory adj = simulate_adjoint(traj, sys, s.policy, s.cost);
    const double J0 = objective(sys, s.policy, s.cost, z0, T);
    const std::size_t k = static_cast<std::size_t>(trial * 2 % 19);
    Insertion ins;
    ins.tau = k * 0.01;
    ins.u = traj.u[k] + randn(1, rng);
    // Richardson on the one-sided difference, its O(λ) bias cancels
    auto slope = [&](double lambda) {
      ins.lambda = lambda;
      return (objective(sys, s.policy, s.cost, z0, T, &ins) - J0) / lambda;
    };
    const double fd = 2.0 * slope(5e-6) - slope(1e-5);
    const double mig =
        mode_insertion_gradient(adj.rho[k], sys.f(traj.z[k], ins.u), sys.f(traj.z[k], traj.u[k]));
    CHECK(std::abs(fd - mig) <= 1e-3 * std::max(std::abs(mig), 1e-8));
  }
}

TEST_CASE("delta information") {
  CHECK(delta_information(0.0, 1.3, 1.3, 2.0, 2.0) == 0.0);
  CHECK(delta_information(0.4, 1e-12, 0.0, 3.0, 2.0) > 0.0);
  CHECK(delta_information(0.4, 0.1, 0.2, 3.0, 2.0) == doctest::Approx(0.3 * 6.0));
}

TEST_CASE("learner starts from a random model and is deterministic") {
  VanDerPol plant(1.0, 0.01);
  VdpDictionary dict;
  LearnerConfig cfg;
  cfg.Q = Mat::Identity(2, 2);
  cfg.R = Mat::Identity(1, 1);
  cfg.R_tilde = Mat::Identity(1, 1);
  cfg.x_target = Vec::Zero(2);
  cfg.seed = 17;

  auto run = [&](std::vector<Vec>& us, KoopmanModel* first) {
    ActiveLearner learner(dict, Vec::Constant(1, 5.0), 0.01, cfg);
    if (first) *first = learner.model();
    PlantState s = plant.make_state(Vec::Constant(2, 1.0));
    for (int k = 0; k < 60; ++k) {
      const Vec u = learner.step(s.x, ControlMode::Active);
      CHECK(std::abs(u[0]) <= 5.0);
      us.push_back(u);
      s = plant.step(s, u, 0.01);
    }
    CHECK(learner.moments().count() == 59);
  };
  std::vector<Vec> a, b;
  KoopmanModel init;
  run(a, &init);
  run(b, nullptr);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK(init.Kc.topRows(4).norm() > 0.0);
  CHECK(init.Kc.bottomRows(1).norm() == 0.0);

  cfg.init_sigma = 0.0;
  ActiveLearner zero(dict, Vec::Constant(1, 5.0), 0.01, cfg);
  CHECK(zero.model().Kc.norm() == 0.0);
}

TEST_CASE("without information weight the learner applies the policy at the target") {
  std::mt19937_64 rng(5);
  const Mat A = testsupport::stable_generator(2, rng), B = randn(2, 1, rng);
  IdentityDictionary dict(2, 1);
  LearnerConfig cfg;
  cfg.Q = Mat::Identity(2, 2);
  cfg.R = Mat::Identity(1, 1);
  cfg.R_tilde = Mat::Identity(1, 1);
  cfg.x_target = Vec::Zero(2);
  cfg.w_info = 0.0;
  cfg.u_ref = Vec::Zero(1);
  ActiveLearner learner(dict, inf_sat(1), 0.01, cfg);
  learner.set_model(linear_model(A, B, 0.01));
  learner.set_learning(false);
  const Vec u = learner.step(Vec::Zero(2), ControlMode::Active);
  CHECK(u == learner.policy()(Vec::Zero(2)));

  // the active term vanishes as R̃ grows
  cfg.R_tilde *= 1e12;
  ActiveLearner stiff(dict, inf_sat(1), 0.01, cfg);
  stiff.set_model(linear_model(A, B, 0.01));
  Vec x(2);
  x << 0.3, -0.2;
  const Vec us = stiff.step(x, ControlMode::Active);
  CHECK((us - stiff.policy()(x)).norm() < 1e-9);
  CHECK(stiff.last_log().mig <= 0.0);
}

TEST_CASE("forced and policy modes") {
  IdentityDictionary dict(2, 1);
  LearnerConfig cfg;
  cfg.Q = Mat::Identity(2, 2);
  cfg.R = Mat::Identity(1, 1);
  cfg.R_tilde = Mat::Identity(1, 1);
  cfg.x_target = Vec::Zero(2);
  ActiveLearner learner(dict, Vec::Constant(1, 1.0), 0.01, cfg);
  const Vec u = learner.step(Vec::Constant(2, 0.5), ControlMode::Forced, Vec::Constant(1, 3.0));
  CHECK(u[0] == 1.0);
  CHECK(learner.last_log().saturated);
  CHECK_THROWS_AS(learner.step(Vec::Constant(2, 0.5), ControlMode::Forced), ContractViolation);
  CHECK_THROWS_AS(learner.step(Vec::Constant(3, 0.5), ControlMode::Policy), ContractViolation);
}
