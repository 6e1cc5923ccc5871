#pragma once

#include <memory>
#include <string>
#include <vector>

#include "activekoop/common.hpp"

namespace activekoop {

/// Function-observable dictionary: the lift z(x), the control observables
/// v(x, u) and their control Jacobian ∂v/∂u. Every built-in dictionary
/// starts z(x) with x itself, so `recover_state` is a head slice.
class Dictionary {
 public:
  virtual ~Dictionary() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int lifted_dim() const = 0;
  virtual int control_obs_dim() const = 0;

  virtual Vec lift(const Vec& x) const = 0;

  /// Defaults to v = u.
  virtual Vec lift_control(const Vec& x, const Vec& u) const;
  virtual Mat control_jacobian(const Vec& x, const Vec& u) const;

  /// True when v(x, u) = u.
  virtual bool identity_control() const { return true; }

  virtual std::vector<std::string> term_names() const = 0;
  virtual std::string kind() const = 0;

  Vec recover_state(const Vec& z) const { return z.head(state_dim()); }

  /// [z(x); v(x, u)].
  Vec lift_full(const Vec& x, const Vec& u) const;

 protected:
  void check_state(const Vec& x) const { require_size(x, state_dim(), "dictionary state"); }
  void check_control(const Vec& u) const { require_size(u, control_dim(), "dictionary control"); }
};

/// z(x) = x.
class IdentityDictionary final : public Dictionary {
 public:
  IdentityDictionary(int n, int m) : n_(n), m_(m) {}
  int state_dim() const override { return n_; }
  int control_dim() const override { return m_; }
  int lifted_dim() const override { return n_; }
  int control_obs_dim() const override { return m_; }
  Vec lift(const Vec& x) const override;
  std::vector<std::string> term_names() const override;
  std::string kind() const override { return "identity"; }

 private:
  int n_, m_;
};

/// z(x) = [x1, x2, x1², x2 x1²], v = u.
class VdpDictionary final : public Dictionary {
 public:
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  int lifted_dim() const override { return 4; }
  int control_obs_dim() const override { return 1; }
  Vec lift(const Vec& x) const override;
  std::vector<std::string> term_names() const override;
  std::string kind() const override { return "vdp"; }
};

/// Quadcopter basis z = [a_g, ω, v, g(v, ω)] with nine bilinear terms, v = u.
///
/// The `Printed` variant uses the published list, whose first entry is v3ω3;
/// `CrossProduct` replaces it with v3ω2 so that every component of ω × v is
/// spanned.
class QuadDictionary final : public Dictionary {
 public:
  enum class Variant { Printed, CrossProduct };
  explicit QuadDictionary(Variant variant = Variant::Printed) : variant_(variant) {}
  int state_dim() const override { return 9; }
  int control_dim() const override { return 4; }
  int lifted_dim() const override { return 18; }
  int control_obs_dim() const override { return 4; }
  Vec lift(const Vec& x) const override;
  std::vector<std::string> term_names() const override;
  std::string kind() const override;
  Variant variant() const { return variant_; }

 private:
  Variant variant_;
};

/// Which monomials the polynomial generator emits over the selected dims.
enum class MonomialRule {
  /// Every monomial with total degree 1..order: C(d + order, order) - 1 terms.
  TotalDegree,
  /// Every exponent in 0..order, total degree ≥ 2 (degree-1 terms are already
  /// in the state block): (order + 1)^d - 1 - d terms.
  PerVariable,
  /// (x_i x_{i+1})^p for p = 1..order over consecutive dims of each group.
  AdjacentPairs,
};

/// z = [x, 1, monomials...] in graded-lexicographic order, v = u.
class PolynomialDictionary final : public Dictionary {
 public:
  /// `groups` lists groups of state indices; TotalDegree and PerVariable use
  /// the union of all groups, AdjacentPairs pairs neighbours within a group.
  PolynomialDictionary(int n, int m, std::vector<std::vector<int>> groups, int order,
                       MonomialRule rule);

  int state_dim() const override { return n_; }
  int control_dim() const override { return m_; }
  int lifted_dim() const override { return n_ + 1 + static_cast<int>(exponents_.size()); }
  int control_obs_dim() const override { return m_; }
  Vec lift(const Vec& x) const override;
  std::vector<std::string> term_names() const override;
  std::string kind() const override { return "polynomial"; }

  /// Exponent vectors (length n) of the monomial block, in emission order.
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

 private:
  int n_, m_;
  std::vector<std::vector<int>> exponents_;
};

/// Convenience wrapper for a single group of state dims.
std::unique_ptr<PolynomialDictionary> poly_dictionary(int n, int m, const std::vector<int>& dims,
                                                      int order,
                                                      MonomialRule rule = MonomialRule::TotalDegree);

/// Central-difference ∂v/∂u, used to cross-check analytic Jacobians.
Mat finite_difference_control_jacobian(const Dictionary& dict, const Vec& x, const Vec& u,
                                       double step = 1e-6);

std::unique_ptr<Dictionary> make_dictionary(const std::string& name);

}  // namespace activekoop
