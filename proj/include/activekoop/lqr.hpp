#pragma once

#include "activekoop/common.hpp"

namespace activekoop {

struct LqWeights {
  Mat Q;   // n×n
  Mat R;   // m×m
  Mat Qf;  // n×n, empty means Q
};

/// Embeds an n×n weight in the top-left block of a c_x×c_x zero matrix.
Mat expand_weights(const Mat& Q, int cx);

/// Time-invariant lifted regulator u = u_ref - K (z - z_d), clamped.
struct LqPolicy {
  Mat K;           // m×c_x
  Mat P;           // c_x×c_x
  Vec z_target;    // c_x
  Vec u_ref;       // m
  Vec saturation;  // m, +inf for unbounded channels
  bool converged = true;
  double care_residual = 0.0;

  int control_dim() const { return static_cast<int>(K.rows()); }
  int lifted_dim() const { return static_cast<int>(K.cols()); }

  Vec raw(const Vec& z) const;
  /// Clamped control; `saturated` (optional) reports whether any channel hit
  /// its bound.
  Vec operator()(const Vec& z, bool* saturated = nullptr) const;
  /// ∂μ/∂z with saturated channels zeroed.
  Mat jacobian(const Vec& z) const;
};

struct LqrOptions {
  /// Hamiltonian flow step; halved until ‖H‖ h ≤ 1.
  double step = 0.01;
  /// Longest backward horizon tried, in units of `step`.
  double horizon_cap = 1e5;
  /// CARE residual tolerance relative to max(1, ‖P‖).
  double tolerance = 1e-9;
};

/// Steady state of the backward Riccati flow from P(T) = Q̃_f, computed
/// exactly over doubling horizons. Throws UnstabilizableModel when P
/// diverges before settling.
Mat solve_riccati(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& Qf,
                  const LqrOptions& opt = {}, bool* converged = nullptr);

/// ‖AᵀP + PA − PBR⁻¹BᵀP + Q‖_F.
double care_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P);

/// Gain K = R⁻¹BᵀP around target z_d with feedforward u_ref.
LqPolicy solve_lqr(const Mat& A, const Mat& B, const Mat& Qt, const Mat& R, const Vec& z_target,
                   const Vec& u_ref, const Vec& saturation, const Mat& Qf = Mat(),
                   const LqrOptions& opt = {});

/// Input that best holds the target still in the model: minimizes
/// ‖drift + B u‖²_W with W PSD (rows with zero weight are ignored).
Vec feedforward_for_target(const Vec& drift, const Mat& B, const Mat& W);

/// K = 0, u = clamp(u_ref).
LqPolicy zero_policy(int cx, const Vec& u_ref, const Vec& saturation);

}  // namespace activekoop
