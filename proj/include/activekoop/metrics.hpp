#pragma once

#include <vector>

#include "activekoop/common.hpp"

namespace activekoop {

struct TrackingReport {
  double rmse = 0.0;
  double pearson_r = 0.0;
  /// Two-sided p-value of H0: r = 0 through t = r sqrt((N-2)/(1-r²)).
  double p_value = 0.0;
  /// Radians in [0, 2π).
  double phase_lag = 0.0;
  std::vector<double> axis_rmse, axis_r;
};

/// Series are N×d (one row per sample, uniform spacing dt). rmse is the root
/// of the mean squared error over all samples and axes; pearson_r is the
/// mean per-axis coefficient; phase_lag is the circular cross-correlation
/// peak shift times base_frequency·dt. Throws CorrelationUndefined when an
/// axis is constant.
TrackingReport tracking_metrics(const Mat& reference, const Mat& actual, double base_frequency,
                                double dt);

double rmse(const Mat& a, const Mat& b);
double pearson(const Vec& a, const Vec& b);
/// Shift k maximizing Σ_t a[t] b[(t + k) mod N], means removed.
int circular_lag(const Mat& reference, const Mat& actual);
double pearson_p_value(double r, int n);
/// I_x(a, b).
double regularized_incomplete_beta(double x, double a, double b);

}  // namespace activekoop
