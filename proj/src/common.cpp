#include "activekoop/common.hpp"

#include <algorithm>
#include <cstdio>

namespace activekoop {

Vec clamp_symmetric(const Vec& u, const Vec& limit) {
  require_size(limit, u.size(), "saturation");
  Vec out = u;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    out[j] = std::clamp(u[j], -limit[j], limit[j]);
  }
  return out;
}

void require_size(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw ContractViolation(std::string(what) + ": expected length " + std::to_string(n) +
                            ", got " + std::to_string(v.size()));
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace activekoop
