#include <cmath>
#include <random>

#include "activekoop/experiments/runners.hpp"
#include "activekoop/lqr.hpp"
#include "activekoop/observables.hpp"
#include "activekoop/plants.hpp"

namespace activekoop {

namespace {

struct Rollout {
  double err = 0.0;
  double cost = 0.0;
};

template <class Policy>
Rollout simulate(const VanDerPol& plant, const VdpConfig& cfg, const Vec& x0, Policy&& policy,
                 const char* method, int ic, CsvTable& out) {
  const int steps = static_cast<int>(std::lround(cfg.duration / cfg.ts));
  const Mat Q = diagonal(cfg.Q);
  PlantState s = plant.make_state(x0);
  Rollout r;
  for (int k = 0; k <= steps; ++k) {
    const Vec u = plant.clamp(policy(s.x));
    out.row().add(method).add(ic).add(k * cfg.ts).add(s.x).add(u[0]).add(r.err);
    if (k == steps) break;
    // left-rectangle rule over each hold interval
    r.err += cfg.ts * s.x.squaredNorm();
    r.cost += cfg.ts * (s.x.dot(Q * s.x) + cfg.R * u[0] * u[0]);
    s = plant.step(s, u, cfg.ts);
  }
  return r;
}

}  // namespace

VdpReport run_vdp_compare(const VdpConfig& cfg) {
  validate(cfg);
  const VanDerPol plant(1.0, cfg.ts);
  const VdpDictionary dict;
  std::mt19937_64 rng(cfg.seed);

  std::uniform_real_distribution<double> xs(-cfg.train_state_range, cfg.train_state_range);
  std::uniform_real_distribution<double> us(-cfg.train_input_range, cfg.train_input_range);
  MomentPair moments(dict.lifted_dim() + dict.control_obs_dim());
  for (int c = 0; c < cfg.train_conditions; ++c) {
    Vec x0(2);
    x0 << xs(rng), xs(rng);
    PlantState s = plant.make_state(x0);
    Vec u(1);
    for (int k = 0; k < cfg.train_steps; ++k) {
      u << us(rng);
      const Vec z0 = dict.lift_full(s.x, u);
      s = plant.step(s, u, cfg.ts);
      moments.accumulate(z0, dict.lift_full(s.x, u));
    }
  }

  VdpReport rep;
  rep.model = fit_model(moments, dict.lifted_dim(), dict.control_obs_dim(), cfg.ts, cfg.ridge);

  const Mat R = Mat::Constant(1, 1, cfg.R);
  const Vec sat = Vec::Constant(1, cfg.saturation);
  const Vec u0 = Vec::Zero(1);
  const Mat Qt = expand_weights(diagonal(cfg.Q), dict.lifted_dim());
  const LqPolicy koop =
      solve_lqr(rep.model.Kx, rep.model.Ku, Qt, R, Vec::Zero(dict.lifted_dim()), u0, sat);
  const LqPolicy lin = solve_lqr(plant.state_jacobian(Vec::Zero(2)), plant.control_jacobian(),
                                 diagonal(cfg.Q), R, Vec::Zero(2), u0, sat);

  std::uniform_real_distribution<double> ts(-cfg.test_range, cfg.test_range);
  int better = 0;
  for (int ic = 0; ic < cfg.test_conditions; ++ic) {
    Vec x0(2);
    x0 << ts(rng), ts(rng);
    const Rollout a = simulate(plant, cfg, x0, [&](const Vec& x) { return koop(dict.lift(x)); },
                               "koopman", ic, rep.trajectories);
    const Rollout b = simulate(plant, cfg, x0, [&](const Vec& x) { return lin(x); }, "linear", ic,
                               rep.trajectories);
    const bool win = a.err < b.err;
    better += win ? 1 : 0;
    rep.summary.row().add(ic).add(x0).add(a.err).add(b.err).add(a.cost).add(b.cost).add(win ? 1 : 0);
  }
  rep.fraction_better = static_cast<double>(better) / cfg.test_conditions;
  return rep;
}

}  // namespace activekoop
