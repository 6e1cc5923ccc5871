#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "activekoop/common.hpp"
#include "activekoop/koopman.hpp"
#include "activekoop/observables.hpp"

namespace activekoop {

/// Fully connected network: tanh on hidden layers, linear output.
struct Mlp {
  std::vector<Mat> W;
  std::vector<Vec> b;

  /// widths = {input, hidden..., output}; weights U(-s, s) with
  /// s = scale·sqrt(6/(fan_in + fan_out)), biases zero.
  static Mlp random(const std::vector<int>& widths, std::mt19937_64& rng, double scale = 1.0);
  static Mlp zeros(const std::vector<int>& widths);

  int input_dim() const { return static_cast<int>(W.front().cols()); }
  int output_dim() const { return static_cast<int>(W.back().rows()); }
  int param_count() const;

  Vec forward(const Vec& in) const;
  /// ∂out/∂in.
  Mat input_jacobian(const Vec& in) const;

  /// Activations of every layer, a[0] = input, a.back() = output.
  std::vector<Vec> activations(const Vec& in) const;
  /// Accumulates ∂L/∂θ into `grad` (same layout as `flatten`) given ∂L/∂out.
  void backward(const std::vector<Vec>& acts, const Vec& dout, Eigen::Ref<Vec> grad) const;

  void flatten(Eigen::Ref<Vec> out) const;
  void unflatten(const Eigen::Ref<const Vec>& in);
};

/// Parameters of the learned dictionary plus the operator trained jointly.
struct NnParams {
  Mlp z_net;  // x -> extra lifted coordinates (the state is prepended)
  Mlp v_net;  // [u; 1] or u -> control observables
  Mat K;      // (c_x + c_u) square
  bool augment_constant = false;
  bool control_skip = false;  // u itself leads the control observables

  int state_dim() const { return z_net.input_dim(); }
  int control_dim() const { return v_net.input_dim() - (augment_constant ? 1 : 0); }
  int lifted_dim() const { return state_dim() + z_net.output_dim(); }
  int control_obs_dim() const { return (control_skip ? control_dim() : 0) + v_net.output_dim(); }
  int param_count() const;

  Vec flatten() const;
  void unflatten(const Vec& theta);
};

/// `z_widths` = {n, hidden, c_x} and `v_widths` = {m or m+1, hidden, c_u}; the
/// z-network emits c_x - n coordinates after the state, and with
/// `control_skip` the v-network emits c_u - m after u. K starts at
/// I + N(0, k_noise²).
NnParams init_nn_params(const std::vector<int>& z_widths, const std::vector<int>& v_widths,
                        int control_dim, std::mt19937_64& rng, bool control_skip = false,
                        double k_noise = 1e-3);

/// z_θ(x) = [x; net(x)], v_θ(u) = net([u; 1]) or net(u), or [u; net(...)]
/// with control_skip.
class NnDictionary final : public Dictionary {
 public:
  explicit NnDictionary(NnParams params) : p_(std::move(params)) {}
  int state_dim() const override { return p_.state_dim(); }
  int control_dim() const override { return p_.control_dim(); }
  int lifted_dim() const override { return p_.lifted_dim(); }
  int control_obs_dim() const override { return p_.control_obs_dim(); }
  Vec lift(const Vec& x) const override;
  Vec lift_control(const Vec& x, const Vec& u) const override;
  Mat control_jacobian(const Vec& x, const Vec& u) const override;
  bool identity_control() const override { return false; }
  std::vector<std::string> term_names() const override;
  std::string kind() const override { return "mlp"; }
  const NnParams& params() const { return p_; }

 private:
  Vec v_input(const Vec& u) const;
  NnParams p_;
};

struct Transition {
  Vec x0, u0, x1, u1;
};

struct LossGrad {
  double loss = 0.0;
  Vec grad;  // NnParams::flatten layout
};

/// Mean over the batch of ‖z̃_θ(x1, u1) - K z̃_θ(x0, u0)‖² and its gradient
/// with respect to every network parameter and K.
LossGrad loss_and_grads(const NnParams& params, const std::vector<const Transition*>& batch);

struct AdamState {
  Vec m, v;
  std::int64_t step = 0;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

AdamState make_adam(int param_count, double lr = 1e-3);
void adam_update(AdamState& state, Vec& theta, const Vec& grad);

struct FitOptions {
  int epochs = 1;
  int batch = 32;
  /// Upper bound on minibatches per call; <= 0 means unbounded.
  int max_batches = 0;
};

struct FitResult {
  KoopmanModel model;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

/// Minibatch Adam on the pooled transitions, then the continuous-time
/// model from log(K).
FitResult episode_fit(const std::vector<Transition>& data, NnParams& params, AdamState& adam,
                      const FitOptions& opt, double ts, std::mt19937_64& rng);

void write_nn_params(std::ostream& os, const NnParams& params);

}  // namespace activekoop
