#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "activekoop/active_learning.hpp"
#include "activekoop/experiments/runners.hpp"
#include "activekoop/nn_dictionary.hpp"
#include "activekoop/plants.hpp"

namespace activekoop {

namespace {

std::unique_ptr<Plant> nn_plant(const NnConfig& cfg) {
  if (cfg.plant == "cartpole") return std::make_unique<CartPendulum>(cfg.ts, cfg.saturation);
  return std::make_unique<TwoLinkArm>(cfg.ts, cfg.saturation);
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Mixes (seed, method, seed index) into one stream id.
std::uint64_t stream(std::uint64_t seed, const std::string& method, int seed_index, int salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(method == "active" ? 1 : 2),
                    static_cast<std::uint32_t>(seed_index), static_cast<std::uint32_t>(salt)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct Episode {
  bool success = false;
  int steps = 0;
  double final_error = 0.0;
};

bool cartpole_failed(const NnConfig& cfg, const Vec& x) {
  return std::abs(x[0]) > cfg.angle_limit || std::abs(x[2]) > cfg.position_limit;
}

}  // namespace

std::vector<NnIteration> run_nn_seed(const NnConfig& cfg, const std::string& method,
                                     int seed_index) {
  validate(cfg);
  const auto plant = nn_plant(cfg);
  const int m = plant->control_dim();
  const bool active = method == "active";
  const Vec target = to_vec(cfg.target);
  const int steps = static_cast<int>(std::lround(cfg.episode_time / cfg.ts));

  std::mt19937_64 rng(stream(cfg.seed, method, seed_index, 0));
  std::mt19937_64 noise_rng(stream(cfg.seed, method, seed_index, 1));
  NnParams params = init_nn_params(cfg.z_widths, cfg.v_widths, m, rng, cfg.control_skip);
  AdamState adam = make_adam(params.param_count(), cfg.lr);
  KoopmanModel model = make_model(params.K, params.lifted_dim(), params.control_obs_dim(), cfg.ts);

  FitOptions fit;
  fit.epochs = cfg.epochs;
  fit.batch = cfg.batch;
  fit.max_batches = cfg.max_batches;

  std::vector<Transition> data;
  std::vector<NnIteration> log;
  for (int it = 0; it < cfg.iterations; ++it) {
    NnIteration rec;
    rec.method = method;
    rec.seed_index = seed_index;
    rec.iteration = it;
    rec.w_info = active ? std::pow(cfg.info_decay, it + 1) : 0.0;
    rec.noise_std =
        active ? 0.0 : std::sqrt(cfg.noise_fraction * cfg.saturation * std::pow(cfg.noise_decay, it + 1));

    const NnDictionary dict(params);
    LearnerConfig lc;
    lc.Q = diagonal(cfg.Q);
    lc.R = diagonal(cfg.R);
    lc.R_tilde = diagonal(cfg.R_tilde);
    lc.x_target = target;
    lc.w_info = rec.w_info;
    lc.eps = cfg.eps;
    lc.horizon = cfg.horizon;
    lc.lqr_horizon = cfg.lqr_horizon;
    lc.seed = stream(cfg.seed, method, seed_index, 2 + it);
    ActiveLearner learner(dict, plant->saturation(), cfg.ts, lc);
    learner.set_model(model);
    learner.set_learning(false);
    std::normal_distribution<double> noise(0.0, rec.noise_std > 0.0 ? rec.noise_std : 1.0);

    std::vector<Range> ranges;
    for (int i = 0; i < plant->state_dim(); ++i) {
      const double c = cfg.plant == "cartpole" ? target[i] : 0.0;
      ranges.emplace_back(c - cfg.init_range, c + cfg.init_range);
    }
    PlantState s = plant->sample_initial(stream(cfg.seed, method, seed_index, 100000 + it), ranges);

    Episode ep;
    Vec x_prev, u_prev;
    bool failed = false;
    for (int k = 0; k < steps; ++k) {
      Vec u;
      if (active) {
        u = learner.step(s.x, ControlMode::Active);
      } else {
        u = learner.step(s.x, ControlMode::Policy);
        for (int j = 0; j < m; ++j) u[j] += rec.noise_std * noise(noise_rng);
        u = plant->clamp(u);
      }
      if (k > 0) data.push_back({x_prev, u_prev, s.x, u});
      x_prev = s.x;
      u_prev = u;
      try {
        s = plant->step(s, u, cfg.ts);
      } catch (const IntegrationBlowup&) {
        failed = true;
        break;
      }
      ep.steps = k + 1;
      if (cfg.plant == "cartpole" && cartpole_failed(cfg, s.x)) {
        failed = true;
        break;
      }
    }
    ep.final_error = (s.x - target).squaredNorm();
    if (cfg.plant == "cartpole") {
      ep.success = !failed && ep.steps == steps;
    } else {
      ep.success = !failed && ep.final_error < cfg.target_tolerance;
    }
    rec.success = ep.success;
    rec.steps = ep.steps;
    rec.final_error = ep.final_error;

    if (!data.empty()) {
      try {
        FitResult fr = episode_fit(data, params, adam, fit, cfg.ts, rng);
        model = fr.model;
        rec.loss = fr.epoch_loss.empty() ? 0.0 : fr.epoch_loss.back();
      } catch (const LogUndefined&) {
        rec.fit_failed = true;
      } catch (const DegenerateData&) {
        rec.fit_failed = true;
      }
    }
    log.push_back(rec);
  }
  return log;
}

NnReport run_nn_experiment(const NnConfig& cfg) {
  validate(cfg);
  NnReport rep;
  rep.max_iterations = cfg.iterations;
  const int runs = static_cast<int>(cfg.methods.size()) * cfg.seeds;
  std::vector<std::vector<NnIteration>> out(static_cast<std::size_t>(runs));
  parallel_for(runs, cfg.threads, [&](int r) {
    const std::string& method = cfg.methods[static_cast<std::size_t>(r / cfg.seeds)];
    out[static_cast<std::size_t>(r)] = run_nn_seed(cfg, method, r % cfg.seeds);
  });
  for (auto& v : out) rep.iterations.insert(rep.iterations.end(), v.begin(), v.end());
  return rep;
}

CsvTable NnReport::iteration_table() const {
  CsvTable t({"method", "seed", "iteration", "success", "steps", "final_error", "loss", "w_info",
              "noise_std", "fit_failed"});
  for (const auto& r : iterations) {
    t.row()
        .add(r.method)
        .add(r.seed_index)
        .add(r.iteration)
        .add(r.success ? 1 : 0)
        .add(r.steps)
        .add(r.final_error)
        .add(r.loss)
        .add(r.w_info)
        .add(r.noise_std)
        .add(r.fit_failed ? 1 : 0);
  }
  return t;
}

int NnReport::first_success(const std::string& method, int seed_index) const {
  int best = max_iterations;
  for (const auto& r : iterations) {
    if (r.method == method && r.seed_index == seed_index && r.success) best = std::min(best, r.iteration);
  }
  return best;
}

double NnReport::median_first_success(const std::string& method, int seeds) const {
  std::vector<double> v;
  for (int s = 0; s < seeds; ++s) v.push_back(first_success(method, s));
  return median(v);
}

CsvTable NnReport::first_success_table() const {
  CsvTable t({"method", "seed", "first_success"});
  std::vector<std::pair<std::string, int>> seen;
  for (const auto& r : iterations) {
    const auto key = std::make_pair(r.method, r.seed_index);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    t.row().add(r.method).add(r.seed_index).add(first_success(r.method, r.seed_index));
  }
  return t;
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace activekoop
