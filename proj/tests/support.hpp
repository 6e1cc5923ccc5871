#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "activekoop/common.hpp"

namespace testsupport {

using activekoop::Mat;
using activekoop::Vec;

inline Mat randn(int r, int c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> nd(0.0, s);
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

inline Vec randn(int n, std::mt19937_64& rng, double s = 1.0) { return randn(n, 1, rng, s); }

inline Vec uniform(int n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> ud(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = ud(rng);
  return v;
}

// Hurwitz: real parts of the spectrum in [-hi, -lo]
inline Mat stable_generator(int n, std::mt19937_64& rng, double lo = 0.2, double hi = 2.0) {
  Mat Q = randn(n, n, rng).householderQr().householderQ();
  Mat T = Mat::Zero(n, n);
  std::uniform_real_distribution<double> ud(lo, hi);
  for (int i = 0; i < n; ++i) T(i, i) = -ud(rng);
  // a few rotations so the spectrum is complex too
  for (int i = 0; i + 1 < n; i += 3) {
    const double w = ud(rng);
    T(i, i + 1) = w;
    T(i + 1, i) = -w;
    T(i + 1, i + 1) = T(i, i);
  }
  return Q * T * Q.transpose();
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double rel_err(const Mat& a, const Mat& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

}  // namespace testsupport
