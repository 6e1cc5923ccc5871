#include "activekoop/experiments/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace activekoop {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VdpConfig, seed, ts, train_conditions, train_steps,
                                                train_state_range, train_input_range, ridge, Q, R,
                                                saturation, test_conditions, test_range, duration)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(QuadConfig, seed, trials, methods, dictionary, ts,
                                                duration, learn_time, velocity_range, saturation,
                                                mass, inertia, k_thrust, k_moment, arm_length, Q,
                                                R, R_tilde, w_info, eps, sigma_scale, horizon,
                                                init_variance, ridge, reference, babble_fraction,
                                                threshold, hold, report_time,
                                                precomputed_episodes, precomputed_steps,
                                                precomputed_input_range, sweep_variances, series_stride,
                                                threads)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NnConfig, plant, seed, seeds, methods, iterations,
                                                ts, episode_time, init_range, target, angle_limit,
                                                position_limit, target_tolerance, saturation,
                                                z_widths, v_widths, augment_constant, control_skip, lr, batch,
                                                epochs, max_batches, Q, R, R_tilde, horizon, lqr_horizon,
                                                info_decay, noise_fraction, noise_decay, eps,
                                                threads)

NnConfig twolink_defaults() {
  NnConfig c;
  c.plant = "twolink";
  c.ts = 0.01;
  c.episode_time = 3.0;
  c.target = {1.0, 0.0, -0.5, 0.0};
  c.z_widths = {4, 20, 40};
  c.v_widths = {2, 20, 20};
  c.augment_constant = false;
  c.Q = {10, 1, 20, 1};
  c.R = {1, 1};
  c.R_tilde = {1e6, 1e6};
  c.horizon = 0.05;
  c.iterations = 40;
  return c;
}

namespace {

void check_keys(const json& j, const json& reference, const std::string& what) {
  if (!j.is_object()) throw InvalidArgument(what + ": config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!reference.contains(it.key())) {
      throw InvalidArgument(what + ": unknown key '" + it.key() + "'");
    }
  }
}

template <class C>
C parse(const json& j, const C& defaults, const std::string& what) {
  json ref = defaults;
  check_keys(j, ref, what);
  ref.merge_patch(j);
  C out;
  try {
    out = ref.get<C>();
  } catch (const json::exception& e) {
    throw InvalidArgument(what + ": " + e.what());
  }
  validate(out);
  return out;
}

void positive(double v, const char* name) {
  if (!(v > 0.0)) throw InvalidArgument(std::string(name) + " must be positive");
}

void nonnegative(const std::vector<double>& v, const char* name) {
  for (double x : v) {
    if (!(x >= 0.0)) throw InvalidArgument(std::string(name) + " entries must be nonnegative");
  }
}

void multiple_of(double value, double ts, const char* name) {
  const double r = value / ts;
  if (std::abs(r - std::round(r)) > 1e-6) {
    throw InvalidArgument(std::string(name) + " must be a multiple of ts");
  }
}

}  // namespace

void validate(const VdpConfig& c) {
  positive(c.ts, "ts");
  positive(c.duration, "duration");
  positive(c.R, "R");
  positive(c.saturation, "saturation");
  if (c.train_conditions < 1 || c.train_steps < 1) throw InvalidArgument("training set is empty");
  if (c.test_conditions < 1) throw InvalidArgument("test_conditions must be >= 1");
  if (c.Q.size() != 2) throw InvalidArgument("Q must have 2 entries");
  nonnegative(c.Q, "Q");
}

void validate(const QuadConfig& c) {
  static const std::set<std::string> known{"active", "babble", "adaptive", "precomputed"};
  if (c.trials < 1) throw InvalidArgument("trials must be >= 1");
  if (c.methods.empty()) throw InvalidArgument("methods is empty");
  for (const auto& m : c.methods) {
    if (!known.count(m)) throw InvalidArgument("unknown method '" + m + "'");
  }
  if (c.dictionary != "quad" && c.dictionary != "quad-cross") {
    throw InvalidArgument("dictionary must be quad or quad-cross");
  }
  if (c.reference != "hover" && c.reference != "model") {
    throw InvalidArgument("reference must be hover or model");
  }
  positive(c.ts, "ts");
  positive(c.duration, "duration");
  positive(c.horizon, "horizon");
  positive(c.saturation, "saturation");
  positive(c.mass, "mass");
  positive(c.eps, "eps");
  positive(c.sigma_scale, "sigma_scale");
  if (c.learn_time < 0.0 || c.learn_time > c.duration) {
    throw InvalidArgument("learn_time must lie in [0, duration]");
  }
  if (c.hold < 0.0 || c.hold > c.duration) throw InvalidArgument("hold must lie in [0, duration]");
  if (c.report_time < 0.0 || c.report_time > c.duration) {
    throw InvalidArgument("report_time must lie in [0, duration]");
  }
  multiple_of(c.horizon, c.ts, "horizon");
  if (c.inertia.size() != 3) throw InvalidArgument("inertia must have 3 entries");
  for (double v : c.inertia) positive(v, "inertia");
  if (c.Q.size() != 9 || c.R.size() != 4 || c.R_tilde.size() != 4) {
    throw InvalidArgument("weights must have 9/4/4 entries");
  }
  nonnegative(c.Q, "Q");
  for (double v : c.R) positive(v, "R");
  for (double v : c.R_tilde) positive(v, "R_tilde");
  if (!(c.init_variance >= 0.0)) throw InvalidArgument("init_variance must be nonnegative");
  for (double v : c.sweep_variances) {
    if (!(v >= 0.0)) throw InvalidArgument("sweep_variances must be nonnegative");
  }
  if (c.series_stride < 1) throw InvalidArgument("series_stride must be >= 1");
  if (c.precomputed_episodes < 1 || c.precomputed_steps < 1) {
    throw InvalidArgument("precomputed data set is empty");
  }
}

void validate(const NnConfig& c) {
  if (c.plant != "cartpole" && c.plant != "twolink") {
    throw InvalidArgument("plant must be cartpole or twolink");
  }
  const std::size_t n = 4, m = c.plant == "cartpole" ? 1 : 2;
  if (c.seeds < 1 || c.iterations < 1) throw InvalidArgument("seeds and iterations must be >= 1");
  for (const auto& mth : c.methods) {
    if (mth != "active" && mth != "noise") throw InvalidArgument("unknown method '" + mth + "'");
  }
  positive(c.ts, "ts");
  positive(c.episode_time, "episode_time");
  positive(c.horizon, "horizon");
  positive(c.saturation, "saturation");
  positive(c.lr, "lr");
  positive(c.eps, "eps");
  multiple_of(c.horizon, c.ts, "horizon");
  if (c.target.size() != n) throw InvalidArgument("target must have 4 entries");
  if (c.Q.size() != n || c.R.size() != m || c.R_tilde.size() != m) {
    throw InvalidArgument("weight sizes do not match the plant");
  }
  nonnegative(c.Q, "Q");
  for (double v : c.R) positive(v, "R");
  for (double v : c.R_tilde) positive(v, "R_tilde");
  if (c.z_widths.size() < 2 || c.v_widths.size() < 2) {
    throw InvalidArgument("network widths need input and output");
  }
  if (c.z_widths.front() != static_cast<int>(n) || c.z_widths.back() <= static_cast<int>(n)) {
    throw InvalidArgument("z_widths must start at 4 and end above 4");
  }
  const int v_in = static_cast<int>(m) + (c.augment_constant ? 1 : 0);
  if (c.v_widths.front() != v_in) {
    throw InvalidArgument("v_widths input must be " + std::to_string(v_in));
  }
  if (c.control_skip && c.v_widths.back() <= static_cast<int>(m)) {
    throw InvalidArgument("v_widths output must exceed the input dimension with control_skip");
  }
  if (!(c.lqr_horizon >= 0.0)) throw InvalidArgument("lqr_horizon must be nonnegative");
  if (c.batch < 1 || c.epochs < 0) throw InvalidArgument("batch must be >= 1, epochs >= 0");
  if (!(c.info_decay > 0.0 && c.info_decay < 1.0) || !(c.noise_decay > 0.0 && c.noise_decay < 1.0)) {
    throw InvalidArgument("decay rates must lie in (0, 1)");
  }
}

VdpConfig parse_vdp_config(const json& j, const VdpConfig& defaults) {
  return parse(j, defaults, "vdp config");
}

QuadConfig parse_quad_config(const json& j, const QuadConfig& defaults) {
  return parse(j, defaults, "quad config");
}

NnConfig parse_nn_config(const json& j, const NnConfig& defaults) {
  return parse(j, defaults, "nn config");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

Mat diagonal(const std::vector<double>& d) {
  Vec v(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) v[static_cast<Eigen::Index>(i)] = d[i];
  return v.asDiagonal();
}

}  // namespace activekoop
