#include "activekoop/lqr.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

namespace activekoop {

Mat expand_weights(const Mat& Q, int cx) {
  if (Q.rows() != Q.cols()) throw ContractViolation("expand_weights: Q must be square");
  if (cx < Q.rows()) {
    throw ContractViolation("expand_weights: c_x smaller than the state weight");
  }
  Mat out = Mat::Zero(cx, cx);
  out.topLeftCorner(Q.rows(), Q.cols()) = Q;
  return out;
}

Vec LqPolicy::raw(const Vec& z) const {
  require_size(z, lifted_dim(), "policy: z");
  return u_ref - K * (z - z_target);
}

Vec LqPolicy::operator()(const Vec& z, bool* saturated) const {
  const Vec r = raw(z);
  const Vec u = clamp_symmetric(r, saturation);
  if (saturated) *saturated = (u.array() != r.array()).any();
  return u;
}

Mat LqPolicy::jacobian(const Vec& z) const {
  const Vec r = raw(z);
  Mat J = -K;
  for (int j = 0; j < control_dim(); ++j) {
    if (std::abs(r[j]) >= saturation[j]) J.row(j).setZero();
  }
  return J;
}

double care_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P) {
  const Mat G = B * R.ldlt().solve(B.transpose());
  return (A.transpose() * P + P * A - P * G * P + Q).norm();
}

namespace {

// One composition of the symplectic map P ↦ Q + Aᵀ P (I + G P)⁻¹ A.
struct Sda {
  Mat A, G, Q;
};

Mat apply(const Sda& s, const Mat& P) {
  const Eigen::Index n = P.rows();
  const Mat W = (Mat::Identity(n, n) + s.G * P).partialPivLu().solve(s.A);
  return s.Q + s.A.transpose() * P * W;
}

Sda doubled(const Sda& s) {
  const Eigen::Index n = s.A.rows();
  Eigen::PartialPivLU<Mat> lu(Mat::Identity(n, n) + s.G * s.Q);
  const Mat W = lu.solve(s.A);
  Sda out;
  out.A = s.A * W;
  out.G = s.G + s.A * lu.solve(s.G) * s.A.transpose();
  out.Q = s.Q + s.A.transpose() * s.Q * W;
  out.G = 0.5 * (out.G + out.G.transpose()).eval();
  out.Q = 0.5 * (out.Q + out.Q.transpose()).eval();
  return out;
}

}  // namespace

Mat solve_riccati(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& Qf,
                  const LqrOptions& opt, bool* converged) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols()) {
    throw ContractViolation("solve_riccati: inconsistent dimensions");
  }
  const Mat Pf = Qf.size() == 0 ? Q : Qf;
  const Mat G = B * R.ldlt().solve(B.transpose());

  Mat H(2 * n, 2 * n);
  H << A, -G, -Q, -A.transpose();
  if (!H.allFinite()) throw UnstabilizableModel("riccati: non-finite model");
  double h = opt.step;
  const double hn = H.lpNorm<1>();
  while (hn * h > 1.0) h *= 0.5;
  const double horizon_max = opt.horizon_cap * opt.step;

  // Backward flow of the Hamiltonian system over one step h.
  const Mat Psi = (-H * h).exp();
  Eigen::PartialPivLU<Mat> lu11(Psi.topLeftCorner(n, n));
  Sda s;
  s.A = lu11.inverse();
  s.G = s.A * Psi.topRightCorner(n, n);
  s.Q = Psi.bottomLeftCorner(n, n) * s.A;
  s.G = 0.5 * (s.G + s.G.transpose()).eval();
  s.Q = 0.5 * (s.Q + s.Q.transpose()).eval();

  Mat P = apply(s, Pf);
  double horizon = h;
  bool done = false;
  while (true) {
    if (!P.allFinite() || P.norm() > 1e14) {
      throw UnstabilizableModel("riccati: solution diverged at horizon " + format_double(horizon));
    }
    const double scale = std::max(1.0, P.norm());
    if (care_residual(A, B, Q, R, P) <= opt.tolerance * scale) {
      done = true;
      break;
    }
    if (2.0 * horizon > horizon_max) break;
    s = doubled(s);
    horizon *= 2.0;
    const Mat Pn = apply(s, Pf);
    const double change = (Pn - P).norm();
    P = Pn;
    if (change <= 1e-15 * std::max(1.0, P.norm()) && P.allFinite()) {
      done = care_residual(A, B, Q, R, P) <= opt.tolerance * std::max(1.0, P.norm());
      break;
    }
  }
  if (converged) *converged = done;
  return 0.5 * (P + P.transpose());
}

LqPolicy solve_lqr(const Mat& A, const Mat& B, const Mat& Qt, const Mat& R, const Vec& z_target,
                   const Vec& u_ref, const Vec& saturation, const Mat& Qf,
                   const LqrOptions& opt) {
  require_size(z_target, A.rows(), "lqr: z_target");
  require_size(u_ref, B.cols(), "lqr: u_ref");
  require_size(saturation, B.cols(), "lqr: saturation");
  LqPolicy pol;
  pol.P = solve_riccati(A, B, Qt, R, Qf, opt, &pol.converged);
  pol.K = R.ldlt().solve(B.transpose() * pol.P);
  pol.z_target = z_target;
  pol.u_ref = u_ref;
  pol.saturation = saturation;
  pol.care_residual = care_residual(A, B, Qt, R, pol.P);
  return pol;
}

Vec feedforward_for_target(const Vec& drift, const Mat& B, const Mat& W) {
  require_size(drift, B.rows(), "feedforward: drift");
  Eigen::SelfAdjointEigenSolver<Mat> es(W);
  const Vec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat root = s.asDiagonal() * es.eigenvectors().transpose();
  return -(root * B).completeOrthogonalDecomposition().solve(root * drift);
}

LqPolicy zero_policy(int cx, const Vec& u_ref, const Vec& saturation) {
  LqPolicy pol;
  pol.K = Mat::Zero(u_ref.size(), cx);
  pol.P = Mat::Zero(cx, cx);
  pol.z_target = Vec::Zero(cx);
  pol.u_ref = u_ref;
  pol.saturation = saturation;
  return pol;
}

}  // namespace activekoop
