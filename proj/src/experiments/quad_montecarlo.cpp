#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "activekoop/active_learning.hpp"
#include "activekoop/experiments/runners.hpp"
#include "activekoop/observables.hpp"
#include "activekoop/plants.hpp"

namespace activekoop {

namespace {

Quadcopter make_quad(const QuadConfig& cfg) {
  QuadParams p;
  p.mass = cfg.mass;
  p.inertia = Eigen::Vector3d(cfg.inertia[0], cfg.inertia[1], cfg.inertia[2]).asDiagonal();
  p.k_thrust = cfg.k_thrust;
  p.k_moment = cfg.k_moment;
  p.arm_length = cfg.arm_length;
  return Quadcopter(p, cfg.ts, cfg.saturation);
}

QuadDictionary make_dict(const QuadConfig& cfg) {
  return QuadDictionary(cfg.dictionary == "quad-cross" ? QuadDictionary::Variant::CrossProduct
                                                       : QuadDictionary::Variant::Printed);
}

std::uint64_t stream(std::uint64_t seed, int trial, int salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(salt)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Vec target_state(const Quadcopter& quad) {
  Vec x = Vec::Zero(9);
  x[2] = quad.params().gravity;
  return x;
}

// ‖x − x_d‖² over the velocity channels; a_g is free.
double velocity_error(const Vec& x) { return x.segment<6>(3).squaredNorm(); }

LearnerConfig learner_config(const QuadConfig& cfg, const Quadcopter& quad, double variance,
                             std::uint64_t seed) {
  LearnerConfig lc;
  lc.Q = diagonal(cfg.Q);
  lc.R = diagonal(cfg.R);
  lc.R_tilde = diagonal(cfg.R_tilde);
  lc.x_target = target_state(quad);
  lc.w_info = cfg.w_info;
  lc.eps = cfg.eps;
  lc.sigma_scale = cfg.sigma_scale;
  lc.horizon = cfg.horizon;
  lc.init_sigma = std::sqrt(variance);
  lc.ridge = cfg.ridge;
  lc.seed = seed;
  if (cfg.reference == "hover") lc.u_ref = Vec::Constant(4, quad.hover_command());
  return lc;
}

}  // namespace

KoopmanModel fit_precomputed_quad_model(const QuadConfig& cfg) {
  validate(cfg);
  const Quadcopter quad = make_quad(cfg);
  const QuadDictionary dict = make_dict(cfg);
  MomentPair moments(dict.lifted_dim() + dict.control_obs_dim());
  std::mt19937_64 rng(stream(cfg.seed, -1, 0));
  std::uniform_real_distribution<double> du(-cfg.precomputed_input_range, cfg.precomputed_input_range);
  const std::vector<Range> ranges{{-cfg.velocity_range, cfg.velocity_range}};
  for (int ep = 0; ep < cfg.precomputed_episodes; ++ep) {
    PlantState s = quad.sample_initial(stream(cfg.seed, -1, 1 + ep), ranges);
    for (int k = 0; k < cfg.precomputed_steps; ++k) {
      Vec u(4);
      for (int j = 0; j < 4; ++j) u[j] = quad.hover_command() + du(rng);
      u = quad.clamp(u);
      const PlantState n = quad.step(s, u, cfg.ts);
      moments.accumulate(dict.lift_full(s.x, u), dict.lift_full(n.x, u));
      s = n;
    }
  }
  return fit_model(moments, dict.lifted_dim(), dict.control_obs_dim(), cfg.ts, cfg.ridge);
}

QuadTrial run_quad_trial(const QuadConfig& cfg, const std::string& method, int trial,
                         double variance, const KoopmanModel* precomputed, CsvTable* series) {
  const Quadcopter quad = make_quad(cfg);
  const QuadDictionary dict = make_dict(cfg);
  QuadTrial rec;
  rec.method = method;
  rec.variance = variance;
  rec.trial = trial;
  rec.seed = stream(cfg.seed, trial, 0);

  ActiveLearner learner(dict, quad.saturation(), cfg.ts,
                        learner_config(cfg, quad, variance, stream(cfg.seed, trial, 1)));
  if (method == "precomputed") {
    if (!precomputed) throw ContractViolation("precomputed method needs a model");
    learner.set_model(*precomputed);
    learner.set_learning(false);
  }
  std::mt19937_64 babble_rng(stream(cfg.seed, trial, 2));
  std::uniform_real_distribution<double> babble(-cfg.babble_fraction, cfg.babble_fraction);

  // initial velocities are shared by every method and variance
  PlantState s = quad.sample_initial(rec.seed, {{-cfg.velocity_range, cfg.velocity_range}});
  const int steps = static_cast<int>(std::lround(cfg.duration / cfg.ts));
  const int learn_steps = static_cast<int>(std::lround(cfg.learn_time / cfg.ts));
  const int report_step = static_cast<int>(std::lround(cfg.report_time / cfg.ts));
  const int hold_steps = static_cast<int>(std::lround(cfg.hold / cfg.ts));

  std::vector<double> err(static_cast<std::size_t>(steps + 1), 0.0);
  double info_sum = 0.0;
  int info_count = 0;
  int last_step = steps;
  for (int k = 0; k <= steps; ++k) {
    err[static_cast<std::size_t>(k)] = velocity_error(s.x);
    if (k == steps) break;
    if (k == learn_steps && method != "adaptive") learner.set_learning(false);
    Vec u;
    if (k < learn_steps && method == "active") {
      u = learner.step(s.x, ControlMode::Active);
    } else if (k < learn_steps && method == "babble") {
      Vec f(4);
      for (int j = 0; j < 4; ++j) f[j] = babble(babble_rng) * quad.saturation()[j];
      u = learner.step(s.x, ControlMode::Forced, f);
    } else {
      u = learner.step(s.x, ControlMode::Policy);
    }
    const double info = learner.last_log().info;
    if (k < learn_steps) {
      info_sum += info;
      ++info_count;
    }
    if (series && k % cfg.series_stride == 0) {
      series->row().add(method).add(variance).add(trial).add(k * cfg.ts).add(err[static_cast<std::size_t>(k)]);
      series->add(info).add(s.x).add(u);
    }
    try {
      s = quad.step(s, u, cfg.ts);
    } catch (const IntegrationBlowup&) {
      rec.blew_up = true;
      last_step = k;
      break;
    }
    if (!s.x.allFinite()) {
      rec.blew_up = true;
      last_step = k;
      break;
    }
  }

  rec.mean_info = info_count > 0 ? info_sum / info_count : 0.0;
  if (rec.blew_up) {
    const double inf = std::numeric_limits<double>::infinity();
    for (int k = last_step + 1; k <= steps; ++k) err[static_cast<std::size_t>(k)] = inf;
  }
  rec.error_at_report = err[static_cast<std::size_t>(report_step)];
  rec.final_error = err[static_cast<std::size_t>(steps)];
  // success: under threshold for the whole final hold window
  int entered = -1;
  for (int k = steps; k >= 0 && err[static_cast<std::size_t>(k)] < cfg.threshold; --k) entered = k;
  rec.success = entered >= 0 && entered <= steps - hold_steps;
  rec.success_time = rec.success ? entered * cfg.ts : -1.0;
  return rec;
}

namespace {

QuadReport run_jobs(const QuadConfig& cfg, const std::vector<std::pair<std::string, double>>& jobs) {
  KoopmanModel pre;
  const bool need_pre =
      std::any_of(jobs.begin(), jobs.end(), [](const auto& j) { return j.first == "precomputed"; });
  if (need_pre) pre = fit_precomputed_quad_model(cfg);

  const int n = static_cast<int>(jobs.size()) * cfg.trials;
  std::vector<QuadTrial> trials(static_cast<std::size_t>(n));
  std::vector<CsvTable> series(static_cast<std::size_t>(n), QuadReport{}.series);
  parallel_for(n, cfg.threads, [&](int i) {
    const auto& job = jobs[static_cast<std::size_t>(i / cfg.trials)];
    trials[static_cast<std::size_t>(i)] = run_quad_trial(cfg, job.first, i % cfg.trials, job.second,
                                                         need_pre ? &pre : nullptr,
                                                         &series[static_cast<std::size_t>(i)]);
  });
  QuadReport rep;
  rep.trials = std::move(trials);
  for (const auto& t : series) rep.series.append(t);
  return rep;
}

}  // namespace

QuadReport run_quad_montecarlo(const QuadConfig& cfg) {
  validate(cfg);
  std::vector<std::pair<std::string, double>> jobs;
  for (const auto& m : cfg.methods) jobs.emplace_back(m, cfg.init_variance);
  return run_jobs(cfg, jobs);
}

QuadReport run_quad_sweep(const QuadConfig& cfg) {
  validate(cfg);
  std::vector<std::pair<std::string, double>> jobs;
  for (double v : cfg.sweep_variances) jobs.emplace_back("active", v);
  jobs.emplace_back("precomputed", cfg.init_variance);
  return run_jobs(cfg, jobs);
}

CsvTable QuadReport::trial_table() const {
  CsvTable t({"method", "variance", "trial", "seed", "success", "success_time", "error_at_report",
              "final_error", "mean_info", "blew_up"});
  for (const auto& r : trials) {
    t.row()
        .add(r.method)
        .add(r.variance)
        .add(r.trial)
        .add(std::to_string(r.seed))
        .add(r.success ? 1 : 0)
        .add(r.success_time)
        .add(r.error_at_report)
        .add(r.final_error)
        .add(r.mean_info)
        .add(r.blew_up ? 1 : 0);
  }
  return t;
}

int QuadReport::successes(const std::string& method, double variance) const {
  int n = 0;
  for (const auto& r : trials) {
    if (r.method == method && r.variance == variance && r.success) ++n;
  }
  return n;
}

double QuadReport::median_error(const std::string& method, double variance) const {
  std::vector<double> v;
  for (const auto& r : trials) {
    if (r.method == method && r.variance == variance) v.push_back(r.error_at_report);
  }
  return median(v);
}

CsvTable QuadReport::summary_table() const {
  CsvTable t({"method", "variance", "trials", "successes", "median_err_report"});
  std::vector<std::pair<std::string, double>> seen;
  for (const auto& r : trials) {
    const auto key = std::make_pair(r.method, r.variance);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    int count = 0;
    for (const auto& q : trials) count += (q.method == r.method && q.variance == r.variance) ? 1 : 0;
    t.row().add(r.method).add(r.variance).add(count).add(successes(r.method, r.variance));
    t.add(median_error(r.method, r.variance));
  }
  return t;
}

}  // namespace activekoop
