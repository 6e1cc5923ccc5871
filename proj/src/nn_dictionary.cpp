#include "activekoop/nn_dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace activekoop {

Mlp Mlp::random(const std::vector<int>& widths, std::mt19937_64& rng, double scale) {
  if (widths.size() < 2) throw InvalidArgument("mlp: need at least input and output widths");
  Mlp net = zeros(widths);
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    const double s = scale * std::sqrt(6.0 / (widths[l] + widths[l + 1]));
    std::uniform_real_distribution<double> ud(-s, s);
    for (Eigen::Index j = 0; j < net.W[l].cols(); ++j) {
      for (Eigen::Index i = 0; i < net.W[l].rows(); ++i) net.W[l](i, j) = ud(rng);
    }
  }
  return net;
}

Mlp Mlp::zeros(const std::vector<int>& widths) {
  if (widths.size() < 2) throw InvalidArgument("mlp: need at least input and output widths");
  Mlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] < 1 || widths[l + 1] < 1) throw InvalidArgument("mlp: widths must be positive");
    net.W.push_back(Mat::Zero(widths[l + 1], widths[l]));
    net.b.push_back(Vec::Zero(widths[l + 1]));
  }
  return net;
}

int Mlp::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += static_cast<int>(W[l].size() + b[l].size());
  return n;
}

std::vector<Vec> Mlp::activations(const Vec& in) const {
  require_size(in, input_dim(), "mlp input");
  std::vector<Vec> a;
  a.reserve(W.size() + 1);
  a.push_back(in);
  for (std::size_t l = 0; l < W.size(); ++l) {
    Vec pre = W[l] * a.back() + b[l];
    if (l + 1 < W.size()) pre = pre.array().tanh().matrix();
    a.push_back(std::move(pre));
  }
  return a;
}

Vec Mlp::forward(const Vec& in) const { return activations(in).back(); }

Mat Mlp::input_jacobian(const Vec& in) const {
  const std::vector<Vec> a = activations(in);
  Mat J = W.back();
  for (std::size_t l = W.size() - 1; l-- > 0;) {
    const Vec d = (1.0 - a[l + 1].array().square()).matrix();
    J = (J * d.asDiagonal()) * W[l];
  }
  return J;
}

void Mlp::backward(const std::vector<Vec>& acts, const Vec& dout, Eigen::Ref<Vec> grad) const {
  std::vector<Eigen::Index> offset(W.size());
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    offset[l] = off;
    off += W[l].size() + b[l].size();
  }
  Vec delta = dout;
  for (std::size_t l = W.size(); l-- > 0;) {
    Eigen::Map<Mat> gW(grad.data() + offset[l], W[l].rows(), W[l].cols());
    gW.noalias() += delta * acts[l].transpose();
    grad.segment(offset[l] + W[l].size(), b[l].size()) += delta;
    if (l > 0) {
      delta = ((W[l].transpose() * delta).array() * (1.0 - acts[l].array().square())).matrix();
    }
  }
}

void Mlp::flatten(Eigen::Ref<Vec> out) const {
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    out.segment(off, W[l].size()) = Eigen::Map<const Vec>(W[l].data(), W[l].size());
    off += W[l].size();
    out.segment(off, b[l].size()) = b[l];
    off += b[l].size();
  }
}

void Mlp::unflatten(const Eigen::Ref<const Vec>& in) {
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    W[l] = Eigen::Map<const Mat>(in.data() + off, W[l].rows(), W[l].cols());
    off += W[l].size();
    b[l] = in.segment(off, b[l].size());
    off += b[l].size();
  }
}

int NnParams::param_count() const {
  return z_net.param_count() + v_net.param_count() + static_cast<int>(K.size());
}

Vec NnParams::flatten() const {
  Vec theta(param_count());
  const int pz = z_net.param_count(), pv = v_net.param_count();
  z_net.flatten(theta.segment(0, pz));
  v_net.flatten(theta.segment(pz, pv));
  theta.segment(pz + pv, K.size()) = Eigen::Map<const Vec>(K.data(), K.size());
  return theta;
}

void NnParams::unflatten(const Vec& theta) {
  if (theta.size() != param_count()) throw ContractViolation("nn params: wrong parameter count");
  const int pz = z_net.param_count(), pv = v_net.param_count();
  z_net.unflatten(theta.segment(0, pz));
  v_net.unflatten(theta.segment(pz, pv));
  K = Eigen::Map<const Mat>(theta.data() + pz + pv, K.rows(), K.cols());
}

NnParams init_nn_params(const std::vector<int>& z_widths, const std::vector<int>& v_widths,
                        int control_dim, std::mt19937_64& rng, bool control_skip,
                        double k_noise) {
  if (z_widths.size() < 2 || v_widths.size() < 2) throw InvalidArgument("nn: bad widths");
  const int n = z_widths.front();
  const int cx = z_widths.back();
  if (cx <= n) throw InvalidArgument("nn: lifted width must exceed the state dimension");
  if (v_widths.front() != control_dim && v_widths.front() != control_dim + 1) {
    throw InvalidArgument("nn: control network input must be m or m + 1");
  }
  if (control_skip && v_widths.back() <= control_dim) {
    throw InvalidArgument("nn: control observables must exceed the input dimension");
  }
  std::vector<int> zw = z_widths;
  zw.back() = cx - n;
  std::vector<int> vw = v_widths;
  if (control_skip) vw.back() -= control_dim;
  NnParams p;
  p.z_net = Mlp::random(zw, rng);
  p.v_net = Mlp::random(vw, rng);
  p.augment_constant = v_widths.front() == control_dim + 1;
  p.control_skip = control_skip;
  const int c = cx + v_widths.back();
  std::normal_distribution<double> nd(0.0, k_noise);
  p.K = Mat::Identity(c, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < c; ++i) p.K(i, j) += nd(rng);
  }
  return p;
}

Vec NnDictionary::v_input(const Vec& u) const {
  check_control(u);
  if (!p_.augment_constant) return u;
  Vec in(u.size() + 1);
  in << u, 1.0;
  return in;
}

Vec NnDictionary::lift(const Vec& x) const {
  check_state(x);
  Vec z(lifted_dim());
  z << x, p_.z_net.forward(x);
  return z;
}

Vec NnDictionary::lift_control(const Vec& x, const Vec& u) const {
  check_state(x);
  const Vec h = p_.v_net.forward(v_input(u));
  if (!p_.control_skip) return h;
  Vec v(control_obs_dim());
  v << u, h;
  return v;
}

Mat NnDictionary::control_jacobian(const Vec& x, const Vec& u) const {
  check_state(x);
  const Mat J = p_.v_net.input_jacobian(v_input(u)).leftCols(control_dim());
  if (!p_.control_skip) return J;
  const int m = control_dim();
  Mat out(control_obs_dim(), m);
  out << Mat::Identity(m, m), J;
  return out;
}

std::vector<std::string> NnDictionary::term_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < state_dim(); ++i) names.push_back("x" + std::to_string(i));
  for (int i = 0; i < p_.z_net.output_dim(); ++i) names.push_back("h" + std::to_string(i));
  return names;
}

LossGrad loss_and_grads(const NnParams& p, const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw InvalidArgument("loss: empty batch");
  const int n = p.state_dim();
  const int cx = p.lifted_dim();
  const int c = cx + p.control_obs_dim();
  const int sk = p.control_skip ? p.control_dim() : 0;
  const int pz = p.z_net.param_count(), pv = p.v_net.param_count();
  const double scale = 1.0 / static_cast<double>(batch.size());

  LossGrad out;
  out.grad = Vec::Zero(p.param_count());
  Mat dK = Mat::Zero(c, c);

  auto v_in = [&](const Vec& u) {
    if (!p.augment_constant) return u;
    Vec in(u.size() + 1);
    in << u, 1.0;
    return in;
  };

  for (const Transition* tr : batch) {
    const auto az0 = p.z_net.activations(tr->x0);
    const auto az1 = p.z_net.activations(tr->x1);
    const auto av0 = p.v_net.activations(v_in(tr->u0));
    const auto av1 = p.v_net.activations(v_in(tr->u1));
    Vec s0(c), s1(c);
    if (sk) {
      s0 << tr->x0, az0.back(), tr->u0, av0.back();
      s1 << tr->x1, az1.back(), tr->u1, av1.back();
    } else {
      s0 << tr->x0, az0.back(), av0.back();
      s1 << tr->x1, az1.back(), av1.back();
    }
    const Vec r = s1 - p.K * s0;
    out.loss += scale * r.squaredNorm();
    const Vec g = 2.0 * scale * r;
    dK.noalias() -= g * s0.transpose();
    const Vec d0 = -(p.K.transpose() * g);
    p.z_net.backward(az1, g.segment(n, cx - n), out.grad.segment(0, pz));
    p.z_net.backward(az0, d0.segment(n, cx - n), out.grad.segment(0, pz));
    p.v_net.backward(av1, g.tail(c - cx - sk), out.grad.segment(pz, pv));
    p.v_net.backward(av0, d0.tail(c - cx - sk), out.grad.segment(pz, pv));
  }
  out.grad.segment(pz + pv, dK.size()) = Eigen::Map<const Vec>(dK.data(), dK.size());
  return out;
}

AdamState make_adam(int param_count, double lr) {
  AdamState s;
  s.m = Vec::Zero(param_count);
  s.v = Vec::Zero(param_count);
  s.lr = lr;
  return s;
}

void adam_update(AdamState& s, Vec& theta, const Vec& grad) {
  if (s.m.size() != theta.size() || grad.size() != theta.size()) {
    throw ContractViolation("adam: shape mismatch");
  }
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  theta.array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

FitResult episode_fit(const std::vector<Transition>& data, NnParams& params, AdamState& adam,
                      const FitOptions& opt, double ts, std::mt19937_64& rng) {
  if (data.empty()) throw InvalidArgument("episode_fit: empty dataset");
  if (opt.batch < 1) throw InvalidArgument("episode_fit: batch must be positive");
  FitResult res;
  Vec theta = params.flatten();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  int batches = 0;
  bool capped = false;
  for (int e = 0; e < opt.epochs && !capped; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int count = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch)) {
      if (opt.max_batches > 0 && batches >= opt.max_batches) {
        capped = true;
        break;
      }
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opt.batch));
      std::vector<const Transition*> batch;
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&data[order[i]]);
      const LossGrad lg = loss_and_grads(params, batch);
      adam_update(adam, theta, lg.grad);
      params.unflatten(theta);
      sum += lg.loss;
      ++count;
      ++batches;
    }
    if (count > 0) res.epoch_loss.push_back(sum / count);
  }
  const int cx = params.lifted_dim(), cu = params.control_obs_dim();
  res.model = make_model(params.K, cx, cu, ts);
  return res;
}

namespace {

void write_mlp(std::ostream& os, const char* prefix, const Mlp& net) {
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    const std::string w = std::string(prefix) + "_W" + std::to_string(l);
    const std::string b = std::string(prefix) + "_b" + std::to_string(l);
    write_matrix(os, w.c_str(), net.W[l]);
    write_matrix(os, b.c_str(), net.b[l]);
  }
}

}  // namespace

void write_nn_params(std::ostream& os, const NnParams& params) {
  os << "activekoop-mlp 1\naugment_constant " << (params.augment_constant ? 1 : 0)
     << "\ncontrol_skip " << (params.control_skip ? 1 : 0) << '\n';
  write_mlp(os, "z", params.z_net);
  write_mlp(os, "v", params.v_net);
  write_matrix(os, "K", params.K);
}

}  // namespace activekoop
