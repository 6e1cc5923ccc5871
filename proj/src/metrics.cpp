#include "activekoop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace activekoop {

namespace {

void check_series(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation("metrics: series shapes differ");
  }
  if (a.rows() < 8) throw ContractViolation("metrics: need at least 8 samples");
  if (a.cols() < 1) throw ContractViolation("metrics: need at least one axis");
}

// Lentz continued fraction for the incomplete beta function.
double beta_cf(double x, double a, double b) {
  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                     b * std::log1p(-x);
  const double bt = std::exp(lbt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(x, a, b) / a;
  return 1.0 - bt * beta_cf(1.0 - x, b, a) / b;
}

double rmse(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() == 0) {
    throw ContractViolation("rmse: series shapes differ");
  }
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double pearson(const Vec& a, const Vec& b) {
  require_size(b, a.size(), "pearson");
  const Vec da = a.array() - a.mean();
  const Vec db = b.array() - b.mean();
  const double na = da.norm(), nb = db.norm();
  const double floor = 1e-14 * std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff())) *
                       std::sqrt(static_cast<double>(a.size()));
  if (na <= floor || nb <= floor) throw CorrelationUndefined("pearson: constant series");
  return std::clamp(da.dot(db) / (na * nb), -1.0, 1.0);
}

int circular_lag(const Mat& reference, const Mat& actual) {
  check_series(reference, actual);
  const Eigen::Index n = reference.rows();
  const Mat ra = reference.rowwise() - reference.colwise().mean();
  const Mat aa = actual.rowwise() - actual.colwise().mean();
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) s += ra.row(t).dot(aa.row((t + k) % n));
    if (k == 0 || s > best_val + 1e-12 * std::abs(best_val)) {
      best_val = s;
      best = static_cast<int>(k);
    }
  }
  return best;
}

double pearson_p_value(double r, int n) {
  if (n < 3) return std::numeric_limits<double>::quiet_NaN();
  const double nu = n - 2.0;
  if (std::abs(r) >= 1.0) return 0.0;
  const double t2 = r * r * nu / (1.0 - r * r);
  return regularized_incomplete_beta(nu / (nu + t2), 0.5 * nu, 0.5);
}

TrackingReport tracking_metrics(const Mat& reference, const Mat& actual, double base_frequency,
                                double dt) {
  check_series(reference, actual);
  if (!(dt > 0.0)) throw InvalidArgument("metrics: dt must be positive");
  TrackingReport rep;
  rep.rmse = rmse(reference, actual);
  double rsum = 0.0;
  for (Eigen::Index j = 0; j < reference.cols(); ++j) {
    rep.axis_rmse.push_back(rmse(reference.col(j), actual.col(j)));
    const double r = pearson(reference.col(j), actual.col(j));
    rep.axis_r.push_back(r);
    rsum += r;
  }
  rep.pearson_r = rsum / static_cast<double>(reference.cols());
  rep.p_value = pearson_p_value(rep.pearson_r, static_cast<int>(reference.rows()));
  const double two_pi = 2.0 * std::acos(-1.0);
  const double lag = circular_lag(reference, actual) * dt * base_frequency;
  rep.phase_lag = std::fmod(std::fmod(lag, two_pi) + two_pi, two_pi);
  return rep;
}

}  // namespace activekoop
