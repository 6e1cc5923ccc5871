#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace activekoop {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base of every error raised by the library. `code()` is a stable,
/// machine-readable identifier used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Dimension mismatch or a violated precondition.
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error("contract_violation", what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

/// Plant integration produced a non-finite state.
class IntegrationBlowup : public Error {
 public:
  IntegrationBlowup(const std::string& what, Vec state)
      : Error("integration_blowup", what), state_(std::move(state)) {}
  const Vec& state() const noexcept { return state_; }

 private:
  Vec state_;
};

class DataQualityError : public Error {
 public:
  explicit DataQualityError(const std::string& what) : Error("data_quality", what) {}
};

class DegenerateData : public Error {
 public:
  explicit DegenerateData(const std::string& what) : Error("degenerate_data", what) {}
};

/// The principal real matrix logarithm does not exist (or is numerically
/// unreliable). Callers may fall back to `to_continuous_with_fallback`.
class LogUndefined : public Error {
 public:
  explicit LogUndefined(const std::string& what) : Error("log_undefined", what) {}
};

class UnstabilizableModel : public Error {
 public:
  explicit UnstabilizableModel(const std::string& what) : Error("unstabilizable_model", what) {}
};

class HorizonDivergence : public Error {
 public:
  explicit HorizonDivergence(const std::string& what) : Error("horizon_divergence", what) {}
};

class CorrelationUndefined : public Error {
 public:
  explicit CorrelationUndefined(const std::string& what) : Error("correlation_undefined", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

/// Classic fourth-order Runge-Kutta step for an autonomous right-hand side.
template <typename Rhs, typename State>
State rk4_step(Rhs&& rhs, const State& x, double h) {
  const State k1 = rhs(x);
  const State k2 = rhs(State(x + 0.5 * h * k1));
  const State k3 = rhs(State(x + 0.5 * h * k2));
  const State k4 = rhs(State(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Elementwise clamp to the symmetric box [-limit, limit]. Infinite limits
/// leave the channel untouched.
Vec clamp_symmetric(const Vec& u, const Vec& limit);

void require_size(const Vec& v, Eigen::Index n, const char* what);

std::string format_double(double v);

}  // namespace activekoop
