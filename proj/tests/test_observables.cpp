#include <doctest.h>

#include <random>

#include "activekoop/nn_dictionary.hpp"
#include "activekoop/observables.hpp"
#include "support.hpp"

using namespace activekoop;

namespace {

long binom(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// exponent tuples over d variables with total degree 1..k, by brute force
long count_total_degree(int d, int k) {
  long count = 0;
  std::vector<int> e(static_cast<std::size_t>(d), 0);
  while (true) {
    int s = 0;
    for (int x : e) s += x;
    if (s >= 1 && s <= k) ++count;
    std::size_t i = 0;
    while (i < e.size() && ++e[i] > k) e[i++] = 0;
    if (i == e.size()) break;
  }
  return count;
}

}  // namespace

TEST_CASE("vdp lift") {
  VdpDictionary d;
  Vec x(2);
  x << 2, 1;
  Vec expect(4);
  expect << 2, 1, 4, 4;
  CHECK(d.lift(x) == expect);
  CHECK(d.lift(Vec::Zero(2)).norm() == 0.0);
  CHECK_THROWS_AS(d.lift(Vec::Zero(3)), ContractViolation);
}

TEST_CASE("quad cross terms at unit velocities") {
  for (auto variant : {QuadDictionary::Variant::Printed, QuadDictionary::Variant::CrossProduct}) {
    QuadDictionary d(variant);
    Vec x(9);
    x << 0.3, -4.0, 8.1, 1, 1, 1, 1, 1, 1;
    const Vec z = d.lift(x);
    CHECK(z.size() == 18);
    CHECK(z.head(9) == x);
    for (int k = 9; k < 18; ++k) CHECK(z[k] == 1.0);
    CHECK(d.term_names().size() == 18);
  }
  CHECK(QuadDictionary(QuadDictionary::Variant::Printed).term_names()[9] == "v3*w3");
  CHECK(QuadDictionary(QuadDictionary::Variant::CrossProduct).term_names()[9] == "v3*w2");
}

TEST_CASE("cross-product variant spans omega x v") {
  QuadDictionary d(QuadDictionary::Variant::CrossProduct);
  std::mt19937_64 rng(1);
  Mat Z(30, 18);
  Mat C(30, 3);
  for (int r = 0; r < 30; ++r) {
    const Vec x = testsupport::randn(9, rng);
    Z.row(r) = d.lift(x).transpose();
    const Eigen::Vector3d w = x.segment<3>(3), v = x.segment<3>(6);
    C.row(r) = w.cross(v).transpose();
  }
  const Mat coef = Z.colPivHouseholderQr().solve(C);
  CHECK((Z * coef - C).norm() < 1e-10);
}

TEST_CASE("leading block and identity control for built-in dictionaries") {
  std::mt19937_64 rng(2);
  for (const char* name : {"vdp", "quad", "quad-cross", "sprk", "sawyer"}) {
    const auto d = make_dictionary(name);
    const Vec x = testsupport::randn(d->state_dim(), rng);
    const Vec u = testsupport::randn(d->control_dim(), rng);
    CHECK(d->lift(x).head(d->state_dim()) == x);
    CHECK(d->recover_state(d->lift(x)) == x);
    CHECK(d->lift_control(x, u) == u);
    CHECK(d->lift_control(x, Vec::Zero(d->control_dim())).norm() == 0.0);
    CHECK(d->control_jacobian(x, u) == Mat::Identity(d->control_dim(), d->control_dim()));
  }
  const auto quad = make_dictionary("quad");
  Vec u(4);
  u << 1, 2, 3, 4;
  CHECK(quad->lift_control(Vec::Zero(9), u) == u);
  const auto sprk = make_dictionary("sprk");
  Vec u2(2);
  u2 << 0.1, -0.2;
  CHECK(sprk->lift_control(Vec::Zero(4), u2) == u2);
}

TEST_CASE("control jacobian against central differences") {
  std::mt19937_64 rng(3);
  QuadDictionary quad;
  for (int i = 0; i < 100; ++i) {
    const Vec x = testsupport::randn(9, rng), u = testsupport::randn(4, rng);
    const Mat fd = finite_difference_control_jacobian(quad, x, u);
    CHECK(testsupport::rel_err(fd, quad.control_jacobian(x, u)) < 1e-6);
  }
  for (bool skip : {false, true}) {
    NnDictionary nn(init_nn_params({4, 8, 10}, {2, 8, 5}, 1, rng, skip));
    for (int i = 0; i < 20; ++i) {
      const Vec x = testsupport::randn(4, rng), u = testsupport::randn(1, rng);
      const Mat fd = finite_difference_control_jacobian(nn, x, u);
      CHECK(testsupport::rel_err(fd, nn.control_jacobian(x, u)) < 1e-5);
    }
  }
}

TEST_CASE("polynomial dictionary counts") {
  // two velocity states of a four-state model, exponents up to 3 each
  const auto sprk = poly_dictionary(4, 2, {2, 3}, 3, MonomialRule::PerVariable);
  CHECK(sprk->lifted_dim() == 18);
  CHECK(make_dictionary("sprk")->lifted_dim() == 18);
  CHECK(sprk->term_names().back() == "x2^3*x3^3");

  const auto small = poly_dictionary(1, 1, {0}, 1);
  CHECK(small->lifted_dim() == 3);
  Vec x(1);
  x << 0.7;
  Vec expect(3);
  expect << 0.7, 1.0, 0.7;
  CHECK(small->lift(x) == expect);

  for (int d = 1; d <= 4; ++d) {
    for (int k = 1; k <= 4; ++k) {
      std::vector<int> dims(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) dims[static_cast<std::size_t>(i)] = i;
      const auto p = poly_dictionary(d, 1, dims, k, MonomialRule::TotalDegree);
      const long terms = static_cast<long>(p->exponents().size());
      CHECK(terms == binom(d + k, k) - 1);
      CHECK(terms == count_total_degree(d, k));
      CHECK(p->lifted_dim() == d + 1 + terms);
    }
  }
  CHECK_THROWS_AS(poly_dictionary(2, 1, {0, 1}, 0), InvalidArgument);
  CHECK_THROWS_AS(poly_dictionary(2, 1, {0, 5}, 2), InvalidArgument);
}

TEST_CASE("polynomial ordering is graded and deterministic") {
  const auto a = poly_dictionary(3, 1, {0, 1, 2}, 3);
  const auto b = poly_dictionary(3, 1, {0, 1, 2}, 3);
  CHECK(a->exponents() == b->exponents());
  CHECK(a->term_names() == b->term_names());
  int prev = 0;
  for (const auto& e : a->exponents()) {
    int s = 0;
    for (int p : e) s += p;
    CHECK(s >= prev);
    prev = s;
  }
  // grlex within degree 2: x0^2 before x0*x1 before x0*x2 before x1^2
  const auto& n = a->term_names();
  CHECK(n[4] == "x0");
  CHECK(n[7] == "x0^2");
  CHECK(n[8] == "x0*x1");
  CHECK(n[9] == "x0*x2");
  CHECK(n[10] == "x1^2");
}
