#include <stdexcept>

#include "doctest.h"
#include "vcf/models.hpp"

using namespace vcf;

namespace {
Scalar rq(long n, long d = 1) { return Scalar(GaussianRational(n, d)); }
}  // namespace

TEST_CASE("quantum product is bilinear, commutative and unital") {
  Model M = model_egdd(3);
  StateVec x(2), y(2);
  x[0] = rq(3);
  x[1] = Scalar::parameter("s1");
  y[0] = rq(1, 2);
  y[1] = rq(-2);
  CHECK(quantum_mul(x, y, M.F) == quantum_mul(y, x, M.F));
  CHECK(quantum_mul(M.F.unit, x, M.F) == x);
  StateVec two_x = rq(2) * x;
  CHECK(quantum_mul(two_x, y, M.F) == rq(2) * quantum_mul(x, y, M.F));
}

TEST_CASE("structure checks pass for all built-in models") {
  CHECK(check_wdvv(model_kw(2).F).ok());
  CHECK(check_wdvv(model_rspin(2, 2).F).ok());
  CHECK(check_wdvv(model_rspin(3, 2).F).ok());
  CHECK(check_wdvv(model_rspin(5, 2).F).ok());
  CHECK(check_wdvv(model_egdd(2).F).ok());
}

TEST_CASE("structure checks locate a perturbed product constant") {
  Model M = model_egdd(2);
  M.F.mult[0].at(0, 0) += rq(1);
  CheckReport rep = check_wdvv(M.F);
  CHECK_FALSE(rep.ok());
  CHECK(rep.failures.size() > 0);
}

TEST_CASE("the homogeneity operator acts exactly on windows") {
  // One-dimensional space with mu = 0: D(c z^k) = A c z^k + (k + 3/2) c z^{k+1}.
  StateSpace sp;
  sp.dim = 1;
  StateEnd gram(1);
  gram.at(0, 0) = rq(1);
  sp.eta = Pairing(gram);
  sp.mu = {rq(0)};
  sp.delta = rq(0);
  StateEnd A(1);
  A.at(0, 0) = rq(2);

  VecSeries f(StateVec(1), 1, 2, true, true);
  f.ref(1)[0] = rq(5);
  f.ref(2)[0] = rq(7);
  VecSeries d = apply_D(A, sp, f);
  CHECK(d.at(1)[0] == rq(10));                      // A f_1
  CHECK(d.at(2)[0] == rq(14) + rq(5, 2) * rq(5));   // A f_2 + (1 + 3/2) f_1
  CHECK(d.at(3)[0] == rq(7, 2) * rq(7));            // (2 + 3/2) f_2
  CHECK(d.at(0)[0].is_zero());
  CHECK(d.zero_below());
  CHECK(d.zero_above());

  // Without the flags, only the interior of the shifted window stays known.
  VecSeries g(StateVec(1), 1, 2, false, false);
  g.ref(1)[0] = rq(5);
  g.ref(2)[0] = rq(7);
  VecSeries dg = apply_D(A, sp, g);
  CHECK_THROWS_AS((void)dg.at(1), WindowError);  // needs the unknown f_0
  CHECK(dg.known(2));
  CHECK_THROWS_AS((void)dg.at(3), WindowError);  // needs unknown f_3
}

TEST_CASE("seeding the principal part is validated") {
  Model M = model_egdd(4);

  // A seed violating the leading grading constraint is rejected.
  VecSeries bad(StateVec(2), -1, -1, false, true);
  bad.ref(-1)[0] = rq(2);
  CHECK_THROWS_AS((void)nu_solve(M.F, bad, 4), std::domain_error);

  // Dropping the z^{-2} layer leaves a kernel direction undetermined.
  VecSeries short_seed(StateVec(2), -1, -1, false, true);
  short_seed.ref(-1) = M.C.nu_vector.at(-1);
  CHECK_THROWS_AS((void)nu_solve(M.F, short_seed, 4), std::domain_error);
}

TEST_CASE("constraint index distinguishes polynomial and tail principal parts") {
  Model kw = model_kw(2);
  CHECK(kw.index.m_nu == -1);
  CHECK(kw.index.c_nu.is_zero());

  Model r2 = model_rspin(2, 4);
  CHECK(r2.index.m_nu == 0);
  CHECK(r2.index.c_nu == rq(1, 2) * Scalar::parameter("eps", 2));
}
