#include "doctest.h"
#include "vcf/zseries.hpp"

using vcf::Pairing;
using vcf::ParamScalar;
using vcf::Scalar;
using vcf::StateEnd;
using vcf::StateVec;
using vcf::WindowError;
using vcf::ZSeries;

namespace {

StateVec basis(size_t n, size_t i) {
  StateVec v(n);
  v[i] = Scalar(1);
  return v;
}

Pairing hyperbolic2() {
  StateEnd g(2);
  g.at(0, 1) = Scalar(1);
  g.at(1, 0) = Scalar(1);
  return Pairing(g);
}

}  // namespace

TEST_CASE("window accounting for coefficients") {
  ZSeries<Scalar> f(Scalar(), 0, 2, true, false);
  f.ref(0) = Scalar(1);
  f.ref(2) = Scalar(3);
  CHECK(f.at(-5).is_zero());   // flagged zero below
  CHECK(f.at(1).is_zero());    // stored zero
  CHECK(f.at(2) == Scalar(3));
  CHECK_THROWS_AS(f.at(3), WindowError);  // unknown above
  CHECK(f.known(-1));
  CHECK_FALSE(f.known(3));
}

TEST_CASE("addition intersects knowledge and keeps flags honest") {
  ZSeries<Scalar> a(Scalar(), 0, 3, true, false);
  ZSeries<Scalar> b(Scalar(), -1, 2, true, true);
  a.ref(1) = Scalar(1);
  b.ref(-1) = Scalar(4);
  b.ref(1) = Scalar(2);
  auto s = a + b;
  CHECK(s.at(-1) == Scalar(4));  // a is flagged zero there
  CHECK(s.at(1) == Scalar(3));
  CHECK(s.at(2).is_zero());
  CHECK(s.at(3).is_zero());               // a stores it, b is flagged zero above
  CHECK_THROWS_AS(s.at(4), WindowError);  // a's window ends without a flag
  CHECK(s.zero_below());
  CHECK_FALSE(s.zero_above());
}

TEST_CASE("product coefficients demand full knowledge") {
  // a = 1 + z (polynomial, fully known); b known only on [0,1]: b = 1 + z + ?z^2...
  ZSeries<Scalar> a(Scalar(), 0, 1, true, true);
  a.ref(0) = Scalar(1);
  a.ref(1) = Scalar(1);
  ZSeries<Scalar> b(Scalar(), 0, 1, true, false);
  b.ref(0) = Scalar(1);
  b.ref(1) = Scalar(1);
  auto mul = [](const Scalar& x, const Scalar& y) { return x * y; };
  CHECK(vcf::product_coefficient(a, b, 0, mul, Scalar()) == Scalar(1));
  CHECK(vcf::product_coefficient(a, b, 1, mul, Scalar()) == Scalar(2));
  // degree 2 needs b_2 which is unknown
  CHECK_THROWS_AS(vcf::product_coefficient(a, b, 2, mul, Scalar()), WindowError);
  // degree -1: contribution range empty, exactly zero
  CHECK(vcf::product_coefficient(a, b, -1, mul, Scalar()).is_zero());
}

TEST_CASE("windowed product of matrix series") {
  size_t n = 2;
  ZSeries<StateEnd> a(StateEnd(n), 0, 2, true, false);
  a.ref(0) = StateEnd::identity(n);
  StateEnd nilp(n);
  nilp.at(0, 1) = Scalar(1);
  a.ref(1) = nilp;
  auto b = vcf::series_invert(a, 2);
  // (I + N z)^{-1} = I - N z + N^2 z^2, with N^2 = 0 here.
  CHECK(b.at(0) == StateEnd::identity(n));
  CHECK(b.at(1) == -nilp);
  CHECK(b.at(2).is_zero());
  auto prod = vcf::series_mul(a, b, 0, 2);
  CHECK(prod.at(0) == StateEnd::identity(n));
  CHECK(prod.at(1).is_zero());
  CHECK(prod.at(2).is_zero());
  CHECK_THROWS_AS(vcf::series_mul(a, b, 0, 3), WindowError);
}

TEST_CASE("series inverse requires identity constant term") {
  ZSeries<StateEnd> a(StateEnd(2), 0, 1, true, false);
  a.ref(0) = StateEnd(2);  // zero, not identity
  CHECK_THROWS_AS(vcf::series_invert(a, 1), std::invalid_argument);
}

TEST_CASE("residue pairing convention") {
  Pairing eta = hyperbolic2();
  // f = phi_0 z^0, g = phi^0 (-z)^{-1} = -phi^0 z^{-1}; phi^0 = phi_1 here.
  ZSeries<StateVec> f(StateVec(2), 0, 0, true, true);
  f.ref(0) = basis(2, 0);
  ZSeries<StateVec> g(StateVec(2), -1, -1, true, true);
  g.ref(-1) = -basis(2, 1);
  CHECK(vcf::residue_pairing(eta, f, g) == Scalar(-1));
  // Swapping the arguments flips the sign here: omega(g, f) = +1.
  CHECK(vcf::residue_pairing(eta, g, f) == Scalar(1));
}

TEST_CASE("residue pairing finiteness comes from support flags") {
  Pairing eta = hyperbolic2();
  // Both factors unbounded above: the residue is not a finite sum.
  ZSeries<StateVec> f(StateVec(2), 0, 3, true, false);
  ZSeries<StateVec> g(StateVec(2), -5, -1, false, true);
  CHECK_THROWS_AS(vcf::residue_pairing(eta, f, g), WindowError);
  // Bounded pair: f top degree 1, g bottom degree -2; finite overlap.
  ZSeries<StateVec> f2(StateVec(2), 0, 1, true, true);
  f2.ref(0) = basis(2, 0);
  f2.ref(1) = basis(2, 1);
  ZSeries<StateVec> g2(StateVec(2), -2, -1, true, true);
  g2.ref(-1) = basis(2, 1);
  g2.ref(-2) = basis(2, 0);
  // omega = eta(f0, g_{-1}) - eta(f1, g_{-2}) = 1 - 1 = 0
  CHECK(vcf::residue_pairing(eta, f2, g2).is_zero());
}

TEST_CASE("negate z and shift") {
  ZSeries<Scalar> f(Scalar(), -1, 1, true, true);
  f.ref(-1) = Scalar(1);
  f.ref(0) = Scalar(2);
  f.ref(1) = Scalar(3);
  auto g = f.negate_z();
  CHECK(g.at(-1) == Scalar(-1));
  CHECK(g.at(0) == Scalar(2));
  CHECK(g.at(1) == Scalar(-3));
  auto h = f.shift(2);
  CHECK(h.lo() == 1);
  CHECK(h.at(1) == Scalar(1));
  CHECK(h.at(3) == Scalar(3));
}
