#include "activekoop/observables.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

namespace activekoop {

Vec Dictionary::lift_control(const Vec& x, const Vec& u) const {
  check_state(x);
  check_control(u);
  return u;
}

Mat Dictionary::control_jacobian(const Vec& x, const Vec& u) const {
  check_state(x);
  check_control(u);
  return Mat::Identity(control_dim(), control_dim());
}

Vec Dictionary::lift_full(const Vec& x, const Vec& u) const {
  Vec out(lifted_dim() + control_obs_dim());
  out << lift(x), lift_control(x, u);
  return out;
}

// ----------------------------------------------------------------- Identity

Vec IdentityDictionary::lift(const Vec& x) const {
  check_state(x);
  return x;
}

std::vector<std::string> IdentityDictionary::term_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < n_; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

// ---------------------------------------------------------------------- VdP

Vec VdpDictionary::lift(const Vec& x) const {
  check_state(x);
  Vec z(4);
  z << x[0], x[1], x[0] * x[0], x[1] * x[0] * x[0];
  return z;
}

std::vector<std::string> VdpDictionary::term_names() const {
  return {"x0", "x1", "x0^2", "x1*x0^2"};
}

// --------------------------------------------------------------------- Quad

namespace {

// Index of (v_i, ω_j) with i, j 1-based as in the published list.
struct Bilinear {
  int a, b;
};

std::array<Bilinear, 9> quad_terms(QuadDictionary::Variant variant) {
  // State layout: a_g 0..2, ω 3..5, v 6..8.
  auto v = [](int i) { return 5 + i; };
  auto w = [](int i) { return 2 + i; };
  const Bilinear first = variant == QuadDictionary::Variant::Printed ? Bilinear{v(3), w(3)}
                                                                     : Bilinear{v(3), w(2)};
  return {first,           Bilinear{v(2), w(3)}, Bilinear{v(3), w(1)},
          Bilinear{v(1), w(3)}, Bilinear{v(2), w(1)}, Bilinear{v(1), w(2)},
          Bilinear{w(2), w(3)}, Bilinear{w(1), w(3)}, Bilinear{w(1), w(2)}};
}

const char* kQuadStateNames[9] = {"ag1", "ag2", "ag3", "w1", "w2", "w3", "v1", "v2", "v3"};

}  // namespace

Vec QuadDictionary::lift(const Vec& x) const {
  check_state(x);
  Vec z(18);
  z.head(9) = x;
  const auto terms = quad_terms(variant_);
  for (int k = 0; k < 9; ++k) {
    z[9 + k] = x[terms[static_cast<std::size_t>(k)].a] * x[terms[static_cast<std::size_t>(k)].b];
  }
  return z;
}

std::vector<std::string> QuadDictionary::term_names() const {
  std::vector<std::string> names(kQuadStateNames, kQuadStateNames + 9);
  for (const auto& t : quad_terms(variant_)) {
    names.push_back(std::string(kQuadStateNames[t.a]) + "*" + kQuadStateNames[t.b]);
  }
  return names;
}

std::string QuadDictionary::kind() const {
  return variant_ == Variant::Printed ? "quad" : "quad-cross";
}

// --------------------------------------------------------------- Polynomial

namespace {

// Graded lexicographic: lower total degree first, then larger leading
// exponents first.
bool grlex_less(const std::vector<int>& a, const std::vector<int>& b) {
  const int da = std::accumulate(a.begin(), a.end(), 0);
  const int db = std::accumulate(b.begin(), b.end(), 0);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

void enumerate_exponents(const std::vector<int>& dims, int n, int per_var_max, int total_max,
                         std::vector<std::vector<int>>& out) {
  std::vector<int> e(static_cast<std::size_t>(n), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t k, int used) {
    if (k == dims.size()) {
      out.push_back(e);
      return;
    }
    const int limit = std::min(per_var_max, total_max - used);
    for (int p = 0; p <= limit; ++p) {
      e[static_cast<std::size_t>(dims[k])] = p;
      rec(k + 1, used + p);
    }
    e[static_cast<std::size_t>(dims[k])] = 0;
  };
  rec(0, 0);
}

}  // namespace

PolynomialDictionary::PolynomialDictionary(int n, int m, std::vector<std::vector<int>> groups,
                                           int order, MonomialRule rule)
    : n_(n), m_(m) {
  if (order < 1) {
    throw InvalidArgument("poly_dictionary: order must be >= 1");
  }
  std::vector<int> dims;
  for (const auto& g : groups) {
    for (int d : g) {
      if (d < 0 || d >= n) throw InvalidArgument("poly_dictionary: state index out of range");
      dims.push_back(d);
    }
  }
  if (dims.empty()) throw InvalidArgument("poly_dictionary: no state dims selected");
  if (std::set<int>(dims.begin(), dims.end()).size() != dims.size()) {
    throw InvalidArgument("poly_dictionary: duplicate state index");
  }

  std::vector<std::vector<int>> all;
  switch (rule) {
    case MonomialRule::TotalDegree:
      enumerate_exponents(dims, n, order, order, all);
      std::erase_if(all, [](const auto& e) { return std::accumulate(e.begin(), e.end(), 0) == 0; });
      break;
    case MonomialRule::PerVariable:
      enumerate_exponents(dims, n, order, order * static_cast<int>(dims.size()), all);
      std::erase_if(all, [](const auto& e) { return std::accumulate(e.begin(), e.end(), 0) < 2; });
      break;
    case MonomialRule::AdjacentPairs:
      for (int p = 1; p <= order; ++p) {
        for (const auto& g : groups) {
          for (std::size_t k = 0; k + 1 < g.size(); ++k) {
            std::vector<int> e(static_cast<std::size_t>(n), 0);
            e[static_cast<std::size_t>(g[k])] = p;
            e[static_cast<std::size_t>(g[k + 1])] = p;
            all.push_back(std::move(e));
          }
        }
      }
      break;
  }
  std::stable_sort(all.begin(), all.end(), grlex_less);
  exponents_ = std::move(all);
}

Vec PolynomialDictionary::lift(const Vec& x) const {
  check_state(x);
  Vec z(lifted_dim());
  z.head(n_) = x;
  z[n_] = 1.0;
  for (std::size_t k = 0; k < exponents_.size(); ++k) {
    double prod = 1.0;
    for (int i = 0; i < n_; ++i) {
      for (int p = 0; p < exponents_[k][static_cast<std::size_t>(i)]; ++p) prod *= x[i];
    }
    z[n_ + 1 + static_cast<Eigen::Index>(k)] = prod;
  }
  return z;
}

std::vector<std::string> PolynomialDictionary::term_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < n_; ++i) names.push_back("x" + std::to_string(i));
  names.emplace_back("1");
  for (const auto& e : exponents_) {
    std::string s;
    for (int i = 0; i < n_; ++i) {
      const int p = e[static_cast<std::size_t>(i)];
      if (p == 0) continue;
      if (!s.empty()) s += "*";
      s += "x" + std::to_string(i);
      if (p > 1) s += "^" + std::to_string(p);
    }
    names.push_back(s);
  }
  return names;
}

std::unique_ptr<PolynomialDictionary> poly_dictionary(int n, int m, const std::vector<int>& dims,
                                                      int order, MonomialRule rule) {
  return std::make_unique<PolynomialDictionary>(n, m, std::vector<std::vector<int>>{dims}, order,
                                                rule);
}

Mat finite_difference_control_jacobian(const Dictionary& dict, const Vec& x, const Vec& u,
                                       double step) {
  const int m = dict.control_dim();
  Mat J(dict.control_obs_dim(), m);
  for (int j = 0; j < m; ++j) {
    Vec up = u, um = u;
    up[j] += step;
    um[j] -= step;
    J.col(j) = (dict.lift_control(x, up) - dict.lift_control(x, um)) / (2.0 * step);
  }
  return J;
}

std::unique_ptr<Dictionary> make_dictionary(const std::string& name) {
  if (name == "vdp") return std::make_unique<VdpDictionary>();
  if (name == "quad") return std::make_unique<QuadDictionary>(QuadDictionary::Variant::Printed);
  if (name == "quad-cross") {
    return std::make_unique<QuadDictionary>(QuadDictionary::Variant::CrossProduct);
  }
  if (name == "sprk") {
    // [x, y, ẋ, ẏ] with velocity monomials up to cubic in each.
    return poly_dictionary(4, 2, {2, 3}, 3, MonomialRule::PerVariable);
  }
  if (name == "sawyer") {
    std::vector<int> angles(7), rates(7);
    std::iota(angles.begin(), angles.end(), 0);
    std::iota(rates.begin(), rates.end(), 7);
    return std::make_unique<PolynomialDictionary>(14, 7, std::vector<std::vector<int>>{angles, rates},
                                                  3, MonomialRule::AdjacentPairs);
  }
  throw InvalidArgument("unknown dictionary '" + name + "'");
}

}  // namespace activekoop
