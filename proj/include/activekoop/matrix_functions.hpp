#pragma once

#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "activekoop/common.hpp"

namespace activekoop {

namespace detail {

// Gauss-Legendre nodes and weights on [0, 1], computed once by Newton's
// method on P_N.
template <int N>
struct GaussLegendre01 {
  std::array<double, N> x{}, w{};
  GaussLegendre01() {
    const double pi = std::acos(-1.0);
    for (int i = 0; i < N; ++i) {
      double t = std::cos(pi * (i + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= N; ++k) {
          const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = N * (t * p1 - p0) / (t * t - 1.0);
        const double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-16) break;
      }
      x[i] = 0.5 * (1.0 - t);
      w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

}  // namespace detail

/// Principal square root by the Denman-Beavers iteration. Caller checks
/// the spectrum; returns false if the iteration does not settle.
template <typename Derived>
bool sqrtm_denman_beavers(const Eigen::MatrixBase<Derived>& A,
                          Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>& out,
                          int max_iter = 60) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  M Y = A;
  M Z = M::Identity(A.rows(), A.cols());
  for (int k = 0; k < max_iter; ++k) {
    Eigen::PartialPivLU<M> luY(Y), luZ(Z);
    M Yn = 0.5 * (Y + luZ.inverse());
    M Zn = 0.5 * (Z + luY.inverse());
    const double change = (Yn - Y).norm();
    Y.swap(Yn);
    Z.swap(Zn);
    if (!Y.allFinite()) return false;
    if (change <= 1e-15 * Y.norm()) {
      out = Y;
      return true;
    }
  }
  out = Y;
  return (out * out - A).norm() <= 1e-12 * A.norm();
}

/// Principal real logarithm by inverse scaling and squaring with a degree-8
/// Pade approximant (partial-fraction form). Throws LogUndefined if A has
/// an eigenvalue on the closed negative real axis or is near-singular.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> logm(
    const Eigen::MatrixBase<Derived>& A) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.rows() != A.cols()) throw ContractViolation("logm: matrix must be square");
  const Eigen::Index n = A.rows();
  if (n == 0) return M(0, 0);
  if (!A.allFinite()) throw LogUndefined("logm: non-finite entries");

  const Eigen::VectorXcd eig = Eigen::EigenSolver<M>(A, false).eigenvalues();
  const double lam_max = eig.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> l = eig[i];
    if (std::abs(l) <= 1e-12 * std::max(lam_max, 1e-300)) {
      throw LogUndefined("logm: matrix is singular or nearly so");
    }
    if (l.real() < 0.0 && std::abs(l.imag()) <= 1e-10 * std::abs(l)) {
      throw LogUndefined("logm: eigenvalue on the negative real axis");
    }
  }

  M X = A;
  int s = 0;
  const M I = M::Identity(n, n);
  while ((X - I).template lpNorm<1>() > 0.25) {
    if (s >= 40) throw LogUndefined("logm: square-root scaling did not converge");
    M R;
    if (!sqrtm_denman_beavers(X, R)) throw LogUndefined("logm: square root failed");
    X.swap(R);
    ++s;
  }

  static const detail::GaussLegendre01<8> gl;
  const M E = X - I;
  M L = M::Zero(n, n);
  for (int j = 0; j < 8; ++j) {
    L += gl.w[j] * Eigen::PartialPivLU<M>(I + gl.x[j] * E).solve(E);
  }
  return std::ldexp(1.0, s) * L;
}

}  // namespace activekoop
