#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <utility>

#include "activekoop/common.hpp"

namespace activekoop {

/// Running means of the snapshot moments over pairs (z̃_m, z̃_{m+1}):
/// A = E[z̃₁ z̃₀ᵀ], G = E[z̃₀ z̃₀ᵀ], and C = E[z̃₁ z̃₁ᵀ] for the residual.
class MomentPair {
 public:
  MomentPair() = default;
  explicit MomentPair(int dim);

  void accumulate(const Vec& z_now, const Vec& z_next);

  int dim() const { return static_cast<int>(A_.rows()); }
  std::int64_t count() const { return count_; }
  const Mat& A() const { return A_; }
  const Mat& G() const { return G_; }
  const Mat& C() const { return C_; }

 private:
  Mat A_, G_, C_;
  std::int64_t count_ = 0;
};

struct KoopmanModel {
  Mat Kd;  // c×c discrete operator
  Mat Kc;  // c×c continuous operator
  Mat Kx;  // c_x×c_x
  Mat Ku;  // c_x×c_u
  int cx = 0;
  int cu = 0;
  double ts = 0.0;
  /// RMS one-step residual of Kd on the data it was fitted to.
  double residual = 0.0;
  /// True when Kc came from the first-order fallback rather than the log.
  bool log_fallback = false;
};

/// Kd = A (G + ridge I)⁺ with an eigendecomposition pseudoinverse that
/// drops eigenvalues below 1e-10 of the largest. `residual` receives the RMS
/// one-step error when non-null.
Mat fit_discrete(const MomentPair& moments, double ridge = 1e-9, double* residual = nullptr);

/// log(Kd) / ts. Throws LogUndefined when the principal log does not exist.
Mat to_continuous(const Mat& Kd, double ts);

/// to_continuous, then integer subdivision k = 2, 4, 8 through repeated
/// square roots, then (Kd - I)/ts. `used_fallback` is set when the last
/// resort was taken.
Mat to_continuous_with_fallback(const Mat& Kd, double ts, bool* used_fallback = nullptr);

/// Top c_x rows of Kc split at column c_x.
std::pair<Mat, Mat> partition(const Mat& Kc, int cx, int cu);

/// Builds a complete model from a discrete operator.
KoopmanModel make_model(const Mat& Kd, int cx, int cu, double ts, double residual = 0.0);

/// fit_discrete + make_model.
KoopmanModel fit_model(const MomentPair& moments, int cx, int cu, double ts, double ridge = 1e-9);

/// Continuous blocks with i.i.d. N(0, σ²) entries, bottom rows zero.
KoopmanModel random_model(int cx, int cu, double ts, double sigma, std::mt19937_64& rng);

/// ż = Kx z + Ku v.
Vec predict(const KoopmanModel& model, const Vec& z, const Vec& v);

/// Plain-text snapshot: a header line, then for each matrix "name rows cols"
/// followed by rows of %.17g numbers.
void write_model(std::ostream& os, const KoopmanModel& model);
KoopmanModel read_model(std::istream& is);

void write_matrix(std::ostream& os, const char* name, const Mat& m);
Mat read_matrix(std::istream& is, const char* name);

}  // namespace activekoop
