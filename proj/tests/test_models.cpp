#include "doctest.h"
#include "vcf/models.hpp"

using namespace vcf;

namespace {
Scalar rq(long n, long d = 1) { return Scalar(GaussianRational(n, d)); }
Scalar eps(int e = 1) { return Scalar::parameter("eps", e); }
Scalar s1(int e = 1) { return Scalar::parameter("s1", e); }
Scalar s2(int e = 1) { return Scalar::parameter("s2", e); }
}  // namespace

TEST_CASE("flat one-dimensional model verifies at any depth") {
  Model M = model_kw(6);
  CHECK(check_wdvv(M.F).ok());
  CheckReport rep = calibration_verify(M.C, M.F, 6);
  INFO(rep.str());
  CHECK(rep.ok());
  CHECK(M.index.m_nu == -1);
  CHECK(M.index.c_nu.is_zero());

  // J(-z) = -z * 1: the shifts are tau_0 = 0 and u = unit.
  VecSeries j = j_function(M.C, M.F, 6);
  CHECK(j.at(0).is_zero());
  CHECK(j.at(1) == -M.F.unit);
}

TEST_CASE("graded model products follow the cyclic rule") {
  Model M5 = model_rspin(5, 2);
  // With no wrap-around the product just adds labels: basis 0 and 1 map to
  // vectors 1 and 2, whose product is vector 4 (index 3) with coefficient 1.
  StateVec e0(4), e1(4);
  e0[0] = rq(1);
  e1[1] = rq(1);
  StateVec p = quantum_mul(e0, e1, M5.F);
  CHECK(p[3] == rq(1));
  CHECK(p[0].is_zero());

  // Top-by-top wraps twice: phi_4 * phi_4 = (eps/5)^2 phi_1.
  StateVec e3(4);
  e3[3] = rq(1);
  StateVec q = quantum_mul(e3, e3, M5.F);
  CHECK(q[0] == rq(1, 25) * eps(2));

  // r = 2 unit: phi_1 * phi_1 = (eps/2)^2 phi_1 forces unit = 4 eps^{-2} phi_1.
  Model M2 = model_rspin(2, 2);
  CHECK(M2.F.unit[0] == rq(4) * eps(-2));
}

TEST_CASE("graded model vacuum recursion matches its closed form") {
  for (int r : {2, 3, 4}) {
    Model M = model_rspin(r, 8);
    VecSeries v = vacuum_solve(M.F, 8);
    for (int k = 0; k <= 8; ++k) {
      INFO("r = " << r << ", order " << k);
      CHECK(v.at(k) == M.C.vacuum.at(k));
    }
  }
}

TEST_CASE("graded model principal-part recursion matches its closed form") {
  for (int r : {2, 3}) {
    Model M = model_rspin(r, 8);
    VecSeries seed = M.C.nu_vector.rewindow(-1, -1);
    VecSeries nu = nu_solve(M.F, seed, 8);
    for (int k = 1; k <= 8; ++k) {
      INFO("r = " << r << ", order " << k);
      CHECK(nu.at(-k) == M.C.nu_vector.at(-k));
    }
  }
}

TEST_CASE("graded model calibration verifies to depth 8") {
  for (int r : {2, 3}) {
    Model M = model_rspin(r, 8);
    CHECK(check_wdvv(M.F).ok());
    CheckReport rep = calibration_verify(M.C, M.F, 8);
    INFO("r = " << r << ": " << rep.str());
    CHECK(rep.ok());
  }
}

TEST_CASE("graded model shifts and index") {
  Model M3 = model_rspin(3, 4);
  // J-function polynomial part: -tau_0 = -r phi_{r-1}.
  VecSeries j = j_function(M3.C, M3.F, 4);
  CHECK(j.at(0)[1] == rq(-3));
  CHECK(j.at(0)[0].is_zero());
  CHECK(j.at(1).is_zero());

  CHECK(M3.index.m_nu == 0);
  CHECK(M3.index.c_nu == rq(1) * eps(2));  // (r-1) eps^2 / 2 at r = 3

  Model M2 = model_rspin(2, 4);
  CHECK(M2.index.c_nu == rq(1, 2) * eps(2));
}

TEST_CASE("two-parameter model products and unit") {
  Model M = model_egdd(2);
  const Scalar kappa = s1(2) + s2(2);
  const Scalar lam = s1(2) * s2(2);

  StateVec e0(2), e1(2);
  e0[0] = rq(1);
  e1[1] = rq(1);

  StateVec p01 = quantum_mul(e0, e1, M.F);
  CHECK(p01[0] == rq(2));
  CHECK(p01[1] == kappa);

  StateVec p00 = quantum_mul(e0, e0, M.F);
  CHECK(p00[0] == kappa);
  CHECK(p00[1] == rq(2) * lam);

  StateVec p11 = quantum_mul(e1, e1, M.F);
  CHECK(p11[0] == kappa * lam.inverse());
  CHECK(p11[1] == rq(2));

  const Scalar d2 = (s1(2) - s2(2)) * (s1(2) - s2(2));
  CHECK(M.F.unit[0] == kappa * d2.inverse());
  CHECK(M.F.unit[1] == rq(-2) * lam * d2.inverse());
  CHECK(quantum_mul(M.F.unit, e1, M.F) == e1);
}

TEST_CASE("two-parameter model first S-matrix layer matches the potential") {
  // Second derivatives of the prepotential at the base point pin S_1:
  // rows are outputs, columns inputs.
  Model M = model_egdd(2);
  const Scalar kappa = s1(2) + s2(2);
  const Scalar lam = s1(2) * s2(2);
  const StateEnd& S1 = M.C.s_matrix.at(-1);
  CHECK(S1.at(0, 0) == kappa);
  CHECK(S1.at(0, 1).is_zero());
  CHECK(S1.at(1, 0) == lam);
  CHECK(S1.at(1, 1) == kappa);
}

TEST_CASE("two-parameter model principal part: seed and growth") {
  Model M = model_egdd(4);
  const Scalar kappa = s1(2) + s2(2);
  const Scalar d2 = (s1(2) - s2(2)) * (s1(2) - s2(2));

  CHECK(M.C.nu_vector.at(-1)[0] == rq(1));
  CHECK(M.C.nu_vector.at(-1)[1] == rq(-1, 2) * kappa);
  CHECK(M.C.nu_vector.at(-2)[0].is_zero());
  CHECK(M.C.nu_vector.at(-2)[1] == rq(-1, 2) * d2);
  // Orders 3 and 4 exist and are forced by the recursion.
  CHECK_FALSE(M.C.nu_vector.at(-3).is_zero());
  CHECK_FALSE(M.C.nu_vector.at(-4).is_zero());
}

TEST_CASE("two-parameter model vacuum recursion matches its closed form") {
  Model M = model_egdd(8);
  VecSeries v = vacuum_solve(M.F, 8);
  for (int k = 0; k <= 8; ++k) {
    INFO("order " << k);
    CHECK(v.at(k) == M.C.vacuum.at(k));
  }
}

TEST_CASE("two-parameter model calibration verifies to depth 8") {
  Model M = model_egdd(8);
  CHECK(check_wdvv(M.F).ok());
  CheckReport rep = calibration_verify(M.C, M.F, 8);
  INFO(rep.str());
  CHECK(rep.ok());
}

TEST_CASE("two-parameter model index and J-function tail") {
  Model M = model_egdd(4);
  const Scalar kappa = s1(2) + s2(2);
  const Scalar lam = s1(2) * s2(2);
  const Scalar d2 = (s1(2) - s2(2)) * (s1(2) - s2(2));

  CHECK(M.index.m_nu == 0);
  CHECK(M.index.c_nu == rq(-1, 4) * d2);

  // Shifts: tau_0 = phi_0 - (eps1+eps2)/2 phi_1, u = 0.
  VecSeries j = j_function(M.C, M.F, 4);
  CHECK(j.at(0)[0] == rq(-1));
  CHECK(j.at(0)[1] == rq(1, 2) * kappa);
  CHECK(j.at(1).is_zero());

  // First tail layer carries the first derivatives of the prepotential:
  // [z^{-1}] J(-z) = -(d_0 Phi) phi^0 - (d_1 Phi) phi^1 with
  // d_0 Phi = eps1 eps2 and d_1 Phi = -(eps1+eps2) at the base point.
  CHECK(j.at(-1)[0] == kappa);
  CHECK(j.at(-1)[1] == -lam);
}
