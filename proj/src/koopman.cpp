#include "activekoop/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <tuple>

#include <unsupported/Eigen/MatrixFunctions>

#include "activekoop/matrix_functions.hpp"

namespace activekoop {

MomentPair::MomentPair(int dim)
    : A_(Mat::Zero(dim, dim)), G_(Mat::Zero(dim, dim)), C_(Mat::Zero(dim, dim)) {}

void MomentPair::accumulate(const Vec& z_now, const Vec& z_next) {
  require_size(z_now, dim(), "moments: z_now");
  require_size(z_next, dim(), "moments: z_next");
  if (!z_now.allFinite() || !z_next.allFinite()) {
    throw DataQualityError("moments: non-finite sample rejected");
  }
  ++count_;
  const double w = 1.0 / static_cast<double>(count_);
  A_ += w * (z_next * z_now.transpose() - A_);
  G_ += w * (z_now * z_now.transpose() - G_);
  C_ += w * (z_next * z_next.transpose() - C_);
  // Keep the Gram moments exactly symmetric.
  G_ = 0.5 * (G_ + G_.transpose()).eval();
  C_ = 0.5 * (C_ + C_.transpose()).eval();
}

Mat fit_discrete(const MomentPair& moments, double ridge, double* residual) {
  if (moments.count() < 1) throw DegenerateData("fit: no samples");
  const int c = moments.dim();
  Eigen::SelfAdjointEigenSolver<Mat> es(moments.G() + ridge * Mat::Identity(c, c));
  const Vec& s = es.eigenvalues();
  const double smax = s.cwiseAbs().maxCoeff();
  if (!(smax > 0.0) || moments.A().cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateData("fit: all-zero moments");
  }
  Vec inv = Vec::Zero(c);
  for (int i = 0; i < c; ++i) {
    if (s[i] > 1e-10 * smax) inv[i] = 1.0 / s[i];
  }
  const Mat& V = es.eigenvectors();
  const Mat Kd = (moments.A() * V) * inv.asDiagonal() * V.transpose();
  if (residual) {
    const double ms = moments.C().trace() - 2.0 * (Kd * moments.A().transpose()).trace() +
                      (Kd * moments.G() * Kd.transpose()).trace();
    *residual = std::sqrt(std::max(ms, 0.0));
  }
  return Kd;
}

Mat to_continuous(const Mat& Kd, double ts) {
  if (!(ts > 0.0)) throw InvalidArgument("to_continuous: ts must be positive");
  return logm(Kd) / ts;
}

Mat to_continuous_with_fallback(const Mat& Kd, double ts, bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  try {
    return to_continuous(Kd, ts);
  } catch (const LogUndefined&) {
  }
  Mat root = Kd;
  for (int k = 2; k <= 8; k *= 2) {
    Mat next;
    if (!sqrtm_denman_beavers(root, next) || !next.allFinite()) break;
    root = next;
    try {
      return to_continuous(root, ts / k);
    } catch (const LogUndefined&) {
    }
  }
  if (used_fallback) *used_fallback = true;
  return (Kd - Mat::Identity(Kd.rows(), Kd.cols())) / ts;
}

std::pair<Mat, Mat> partition(const Mat& Kc, int cx, int cu) {
  if (cx < 0 || cu < 0 || Kc.rows() != cx + cu || Kc.cols() != cx + cu) {
    throw ContractViolation("partition: matrix is " + std::to_string(Kc.rows()) + "x" +
                            std::to_string(Kc.cols()) + ", expected " +
                            std::to_string(cx + cu) + " square");
  }
  return {Kc.topLeftCorner(cx, cx), Kc.topRightCorner(cx, cu)};
}

KoopmanModel make_model(const Mat& Kd, int cx, int cu, double ts, double residual) {
  KoopmanModel m;
  m.Kd = Kd;
  m.Kc = to_continuous_with_fallback(Kd, ts, &m.log_fallback);
  std::tie(m.Kx, m.Ku) = partition(m.Kc, cx, cu);
  m.cx = cx;
  m.cu = cu;
  m.ts = ts;
  m.residual = residual;
  return m;
}

KoopmanModel fit_model(const MomentPair& moments, int cx, int cu, double ts, double ridge) {
  double residual = 0.0;
  const Mat Kd = fit_discrete(moments, ridge, &residual);
  return make_model(Kd, cx, cu, ts, residual);
}

KoopmanModel random_model(int cx, int cu, double ts, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, sigma);
  KoopmanModel m;
  m.cx = cx;
  m.cu = cu;
  m.ts = ts;
  m.Kc = Mat::Zero(cx + cu, cx + cu);
  for (int j = 0; j < cx + cu; ++j) {
    for (int i = 0; i < cx; ++i) m.Kc(i, j) = nd(rng);
  }
  m.Kd = (m.Kc * ts).exp();
  std::tie(m.Kx, m.Ku) = partition(m.Kc, cx, cu);
  return m;
}

Vec predict(const KoopmanModel& model, const Vec& z, const Vec& v) {
  require_size(z, model.cx, "predict: z");
  require_size(v, model.cu, "predict: v");
  return model.Kx * z + model.Ku * v;
}

void write_matrix(std::ostream& os, const char* name, const Mat& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      os << (j ? " " : "") << buf;
    }
    os << '\n';
  }
}

Mat read_matrix(std::istream& is, const char* name) {
  std::string tag;
  Eigen::Index r = 0, c = 0;
  if (!(is >> tag >> r >> c) || tag != name || r < 0 || c < 0) {
    throw IoError(std::string("model file: expected matrix '") + name + "'");
  }
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      if (!(is >> m(i, j))) throw IoError(std::string("model file: truncated matrix ") + name);
    }
  }
  return m;
}

void write_model(std::ostream& os, const KoopmanModel& model) {
  char buf[64];
  os << "activekoop-model 1\n";
  os << "cx " << model.cx << " cu " << model.cu;
  std::snprintf(buf, sizeof(buf), "%.17g", model.ts);
  os << " ts " << buf;
  std::snprintf(buf, sizeof(buf), "%.17g", model.residual);
  os << " residual " << buf << " fallback " << (model.log_fallback ? 1 : 0) << '\n';
  write_matrix(os, "Kd", model.Kd);
  write_matrix(os, "Kc", model.Kc);
}

KoopmanModel read_model(std::istream& is) {
  std::string magic, k1, k2, k3, k4, k5;
  int version = 0, fallback = 0;
  KoopmanModel m;
  if (!(is >> magic >> version) || magic != "activekoop-model" || version != 1) {
    throw IoError("model file: bad header");
  }
  if (!(is >> k1 >> m.cx >> k2 >> m.cu >> k3 >> m.ts >> k4 >> m.residual >> k5 >> fallback)) {
    throw IoError("model file: bad dimension line");
  }
  m.log_fallback = fallback != 0;
  m.Kd = read_matrix(is, "Kd");
  m.Kc = read_matrix(is, "Kc");
  std::tie(m.Kx, m.Ku) = partition(m.Kc, m.cx, m.cu);
  return m;
}

}  // namespace activekoop
