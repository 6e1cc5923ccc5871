#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "activekoop/common.hpp"

namespace activekoop {

struct VdpConfig {
  std::uint64_t seed = 7;
  double ts = 0.01;
  // training data
  int train_conditions = 5000;
  int train_steps = 50;
  double train_state_range = 3.0;
  double train_input_range = 2.0;
  double ridge = 1e-9;
  // control
  std::vector<double> Q{1.0, 1.0};
  double R = 0.1;
  double saturation = 1e9;
  // evaluation
  int test_conditions = 100;
  double test_range = 3.0;
  double duration = 10.0;
};

struct QuadConfig {
  std::uint64_t seed = 1;
  int trials = 20;
  std::vector<std::string> methods{"active", "babble", "adaptive", "precomputed"};
  std::string dictionary = "quad";  // "quad" or "quad-cross"
  double ts = 0.005;
  double duration = 5.0;
  double learn_time = 1.0;
  double velocity_range = 2.0;
  double saturation = 6.0;
  // plant
  double mass = 0.6;
  std::vector<double> inertia{0.04, 0.04, 0.07};
  double k_thrust = 1.0;
  double k_moment = 0.025;
  double arm_length = 0.2;
  // control and learning
  std::vector<double> Q{1, 1, 1, 1, 1, 1, 5, 5, 5};
  std::vector<double> R{1, 1, 1, 1};
  std::vector<double> R_tilde{1000, 1000, 1000, 1000};
  double w_info = 0.1;
  double eps = 1e-6;
  double sigma_scale = 1.0;
  double horizon = 0.1;
  double init_variance = 1.0;
  double ridge = 1e-9;
  /// "hover" uses the level-flight rotor command; "model" solves for it.
  std::string reference = "hover";
  double babble_fraction = 0.33;
  // success
  double threshold = 0.01;
  double hold = 0.5;
  double report_time = 3.0;
  // offline benchmark data
  int precomputed_episodes = 200;
  int precomputed_steps = 40;
  double precomputed_input_range = 2.0;
  // sensitivity sweep
  std::vector<double> sweep_variances{0.01, 0.1, 1.0, 10.0};
  int series_stride = 5;  // time-series rows every this many steps
  int threads = 0;        // 0: hardware concurrency
};

struct NnConfig {
  std::string plant = "cartpole";  // or "twolink"
  std::uint64_t seed = 1;
  int seeds = 5;
  std::vector<std::string> methods{"active", "noise"};
  int iterations = 150;
  double ts = 0.02;
  double episode_time = 5.0;
  double init_range = 0.05;
  std::vector<double> target{0, 0, 0, 0};
  // cart-pole failure box; two-link success tolerance
  double angle_limit = 0.2;
  double position_limit = 2.4;
  double target_tolerance = 0.05;
  double saturation = 10.0;
  // networks
  std::vector<int> z_widths{4, 20, 40};
  std::vector<int> v_widths{2, 20, 10};
  bool augment_constant = true;
  bool control_skip = true;
  double lr = 1e-3;
  int batch = 32;
  int epochs = 1;
  int max_batches = 200;
  // control and exploration
  std::vector<double> Q{50, 1, 10, 0.1};
  std::vector<double> R{1};
  std::vector<double> R_tilde{1e6};
  double horizon = 0.1;
  double lqr_horizon = 10.0;  // seconds of backward Riccati flow; 0 = until converged
  double info_decay = 0.2;
  double noise_fraction = 0.4;
  double noise_decay = 0.9;
  double eps = 1e-6;
  int threads = 0;
};

NnConfig twolink_defaults();

void to_json(nlohmann::json& j, const VdpConfig& c);
void from_json(const nlohmann::json& j, VdpConfig& c);
void to_json(nlohmann::json& j, const QuadConfig& c);
void from_json(const nlohmann::json& j, QuadConfig& c);
void to_json(nlohmann::json& j, const NnConfig& c);
void from_json(const nlohmann::json& j, NnConfig& c);

/// Parses `j` over `defaults`; unknown keys and invalid values throw
/// InvalidArgument.
VdpConfig parse_vdp_config(const nlohmann::json& j, const VdpConfig& defaults = {});
QuadConfig parse_quad_config(const nlohmann::json& j, const QuadConfig& defaults = {});
NnConfig parse_nn_config(const nlohmann::json& j, const NnConfig& defaults);

void validate(const VdpConfig& c);
void validate(const QuadConfig& c);
void validate(const NnConfig& c);

nlohmann::json read_json_file(const std::string& path);

Mat diagonal(const std::vector<double>& d);

}  // namespace activekoop
