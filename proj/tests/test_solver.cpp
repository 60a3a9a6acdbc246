#include "vcf/solver.hpp"

#include <map>

#include "doctest.h"
#include "vcf/models.hpp"

using namespace vcf;

namespace {

Scalar rq(long n) { return Scalar(n); }
Scalar rq(long n, long d) { return Scalar(mpq_class(n, d)); }

Insertions key(std::initializer_list<std::pair<long, int>> vs) {
  Insertions k;
  for (const auto& [lev, lab] : vs) k.push_back({lev, lab});
  return sorted_key(k);
}

// One-label keys (t_k^0 resp. p_k).
Insertions key1(std::initializer_list<long> levels) {
  Insertions k;
  for (long lev : levels) k.push_back({lev, 0});
  return sorted_key(k);
}

const Scalar& stored(const CorrelatorStore& s, int g, const Insertions& k) {
  const Scalar* p = s.find(g, k);
  REQUIRE(p != nullptr);
  return *p;
}

}  // namespace

TEST_CASE("key helpers") {
  Insertions k = key({{2, 1}, {0, 0}, {2, 1}, {1, 0}});
  CHECK(k == key({{0, 0}, {1, 0}, {2, 1}, {2, 1}}));
  CHECK(key_weight(k) == 5);
  CHECK(key_mult_factorial(k) == mpq_class(2));
  CHECK(key_mult_factorial(key1({3, 3, 3, 1})) == mpq_class(6));
  CHECK(key_mult_factorial(key1({})) == mpq_class(1));
}

TEST_CASE("store domain and stability guards") {
  CorrelatorStore s = make_gdd_store(2, 6, 3);
  CHECK_THROWS_AS(s.set(0, key1({0}), rq(1)), std::domain_error);   // level below 1
  CHECK_THROWS_AS(s.set(0, key({{1, 1}}), rq(1)), std::domain_error);  // label out of range
  CHECK_THROWS_AS(s.set(1, key1({}), rq(1)), std::domain_error);    // unstable above genus 0
  s.set(0, key1({2, 1}), rq(7));  // genus-0 two-point keys are admissible
  CHECK(stored(s, 0, key1({1, 2})) == rq(7));
}

TEST_CASE("residual of the first constraint on a seeded one-variable store") {
  Model kw = model_kw(8);
  Schedule sched = schedule_for(kw);
  CHECK(sched.m_lo == -1);

  CorrelatorStore store = make_model_store(kw, 0, 2, 3);
  store.set(0, key1({0, 0, 0}), rq(1));
  UnstableData none;
  EvalContext ctx{&store, &none, sched.policy};

  VirasoroNormalForm lm1 = sched.build(-1, 8);
  // 1/2 t_0^2 from the quadratic block cancels -<t_0^3>/2 from the string term.
  CHECK(residual(lm1, ctx, 0, key1({0, 0})) == rq(0));

  // Negative control: a corrupted seed leaves an exact nonzero residual.
  store.set(0, key1({0, 0, 0}), rq(2));
  CHECK(residual(lm1, ctx, 0, key1({0, 0})) == rq(-1, 2));

  // Operator windows too small for the monomial are rejected, not truncated.
  VirasoroNormalForm tiny = sched.build(3, 4);
  CHECK_THROWS_AS(residual(tiny, ctx, 0, key1({2, 2})), std::domain_error);

  // A stable missing entry is an error naming the key.
  store.entries.clear();
  try {
    residual(lm1, ctx, 0, key1({0, 0}));
    CHECK(false);
  } catch (const MissingEntryError& e) {
    CHECK(e.genus == 0);
    CHECK(e.key == key1({0, 0, 0}));
  }
}

TEST_CASE("one-variable tower: closed values, invariants, cross-checks") {
  Model kw = model_kw(8);
  SolveReport rep;
  CorrelatorStore store = solve_model(kw, 3, 8, 3, &rep);

  CHECK(rep.unreached.empty());
  CHECK(rep.ok());
  CHECK(rep.cross_checked > 500);
  INFO(rep.str());
  CHECK(rep.cross_check.ok());

  // Hand values of the KdV tower.
  CHECK(stored(store, 0, key1({0, 0, 0})) == rq(1));
  CHECK(stored(store, 0, key1({0, 0, 0, 1})) == rq(1));
  CHECK(stored(store, 0, key1({0, 0, 0, 0, 2})) == rq(1));
  CHECK(stored(store, 0, key1({0, 0, 0, 1, 1})) == rq(2));
  CHECK(stored(store, 0, key1({0, 0, 1})) == rq(0));  // degree mismatch
  CHECK(stored(store, 1, key1({1})) == rq(1, 24));
  CHECK(stored(store, 1, key1({0, 2})) == rq(1, 24));
  CHECK(stored(store, 1, key1({1, 1})) == rq(1, 24));
  CHECK(stored(store, 2, key1({4})) == rq(1, 1152));
  CHECK(stored(store, 2, key1({2, 3})) == rq(29, 5760));
  CHECK(stored(store, 2, key1({0, 5})) == rq(1, 1152));
  CHECK(stored(store, 2, key1({1, 4})) == rq(1, 384));

  // Degree selection: a correlator vanishes unless sum(k) = 3g - 3 + n.
  for (const auto& [gk, v] : store.entries) {
    const auto& [g, M] = gk;
    if (key_weight(M) != 3 * g - 3 + static_cast<long>(M.size()))
      CHECK(v == rq(0));
  }

  // Dilaton relation: appending t_1 multiplies by 2g - 2 + n.
  int dilaton_checked = 0;
  for (const auto& [gk, v] : store.entries) {
    const auto& [g, M] = gk;
    Insertions up = M;
    up.push_back({1, 0});
    up = sorted_key(up);
    if (const Scalar* u = store.find(g, up)) {
      long n = static_cast<long>(M.size());
      if (2 * g - 2 + n > 0) {
        CHECK(*u == Scalar(2 * g - 2 + n) * v);
        ++dilaton_checked;
      }
    }
  }
  CHECK(dilaton_checked > 100);

  // String relation: prepending t_0 lowers one insertion.
  int string_checked = 0;
  for (const auto& [gk, v] : store.entries) {
    const auto& [g, M] = gk;
    long n = static_cast<long>(M.size());
    if (2 * g - 2 + n <= 0) continue;
    Insertions up = M;
    up.push_back({0, 0});
    up = sorted_key(up);
    if (const Scalar* u = store.find(g, up)) {
      Scalar sum;
      bool all_present = true;
      for (size_t i = 0; i < M.size() && all_present; ++i) {
        if (M[i].k == 0) continue;
        Insertions low = M;
        --low[i].k;
        low = sorted_key(low);
        if (const Scalar* lv = store.find(g, low))
          sum += *lv;
        else
          all_present = false;
      }
      if (all_present) {
        CHECK(*u == sum);
        ++string_checked;
      }
    }
  }
  CHECK(string_checked > 100);

  // Homogeneity relation on every stored key.
  int checked = 0, skipped = 0;
  CheckReport hom = homogeneity_check(store, kw, PotentialKind::Descendent,
                                      UnstableData(), &checked, &skipped);
  INFO(hom.str());
  CHECK(hom.ok());
  CHECK(checked > 400);
}

TEST_CASE("one-variable tower: seed confirmation and conflicts") {
  Model kw = model_kw(8);
  Schedule sched = schedule_for(kw);
  UnstableData none;

  CorrelatorStore store = make_model_store(kw, 1, 4, 3);
  store.set(0, key1({0, 0, 0}), rq(1));
  SolveReport rep = solve_triangular(store, sched, none);
  CHECK(rep.seeds_confirmed == 1);
  CHECK(rep.ok());
  CHECK(stored(store, 1, key1({1})) == rq(1, 24));

  CorrelatorStore bad = make_model_store(kw, 1, 4, 3);
  bad.set(0, key1({0, 0, 0}), rq(2));
  CHECK_THROWS_AS(solve_triangular(bad, sched, none), ConflictError);

  // A corrupted store is detected by the residual sweep.
  CorrelatorStore broken = store;
  broken.entries[{1, key1({1})}] = rq(1, 25);
  CheckReport sweep = verify_residuals(broken, sched, none, 4);
  CHECK(!sweep.ok());
}

TEST_CASE("genus-0 constraint values through the calibration") {
  const Scalar eps2 = Scalar::parameter("eps", 2);
  SUBCASE("identity calibration gives zero at every index") {
    Model kw = model_kw(10);
    for (long m = -1; m <= 4; ++m)
      CHECK(genus0_residual_via_J(kw.F, kw.C, m, 10) == rq(0));
  }
  SUBCASE("graded one-parameter models: the central constant at index 0") {
    for (int r : {2, 3, 5}) {
      Model spin = model_rspin(r, 12);
      Scalar expect = rq(-(r - 1), 2) * eps2;
      CHECK(spin.index.m_nu == 0);
      CHECK(spin.index.c_nu == -expect);
      CHECK(genus0_residual_via_J(spin.F, spin.C, 0, 12) == expect);
      for (long m = 1; m <= 4; ++m)
        CHECK(genus0_residual_via_J(spin.F, spin.C, m, 12) == rq(0));
    }
  }
  SUBCASE("two-parameter model: the central constant at index 0") {
    Model eg = model_egdd(12);
    const Scalar e1 = Scalar::parameter("s1", 2);
    const Scalar e2 = Scalar::parameter("s2", 2);
    Scalar expect = rq(1, 4) * (e1 - e2) * (e1 - e2);
    CHECK(eg.index.m_nu == 0);
    CHECK(eg.index.c_nu == -expect);
    CHECK(genus0_residual_via_J(eg.F, eg.C, 0, 12) == expect);
    for (long m = 1; m <= 4; ++m)
      CHECK(genus0_residual_via_J(eg.F, eg.C, m, 12) == rq(0));
  }
}

TEST_CASE("genus-1 closed form") {
  CHECK(genus1_rhs(model_kw(4).F, 0) == rq(0));
  CHECK(genus1_rhs(model_kw(4).F, 3) == rq(0));
  CHECK(genus1_rhs(model_egdd(4).F, 0) == rq(0));
  CHECK_THROWS_AS(genus1_rhs(model_kw(4).F, -1), std::domain_error);
  // r-spin at index 0: -tr(mu^2)/4 - tr(mu)/24 + tr((mu+3/2))/24 over a basis
  // where multiplication by the unit is the identity.
  for (int r : {2, 3, 5}) {
    Model spin = model_rspin(r, 4);
    Scalar expect;
    for (int a = 0; a < r - 1; ++a) {
      Scalar mu = spin.F.space.mu[static_cast<size_t>(a)];
      expect += rq(-1, 4) * mu * mu - rq(1, 24) * mu + rq(1, 24) * (mu + rq(3, 2));
    }
    CHECK(genus1_rhs(spin.F, 0) == expect);
  }
}

TEST_CASE("graded model solve cross-validates against the calibration tail") {
  Model spin = model_rspin(3, 12);
  UnstableData u = UnstableData::from_calibration(spin.F, spin.C, spin.depth);

  // Two-point data is symmetric.
  CHECK(u.two_point({0, 0}, {2, 1}) == u.two_point({2, 1}, {0, 0}));
  CHECK(u.two_point({1, 0}, {1, 1}) == u.two_point({1, 1}, {1, 0}));

  SolveReport rep;
  CorrelatorStore store = solve_model(spin, 1, 4, 2, &rep);
  INFO(rep.str());
  CHECK(rep.ok());
  CHECK(rep.solved > 50);
  // Some keys carry no leading insertion; they are reported, not guessed.
  CHECK(!rep.unreached.empty());

  // Derived one-point and two-point values agree with the independent
  // J-function and S-matrix derivations.
  for (long k = 0; k <= 4; ++k) {
    Insertions one = key({{k, 1}});
    if (const Scalar* p = store.find(0, one)) CHECK(*p == u.one_point({k, 1}));
  }
  int two_checked = 0;
  for (const auto& [gk, v] : store.entries) {
    const auto& [g, M] = gk;
    if (g == 0 && M.size() == 2) {
      CHECK(v == u.two_point(M[0], M[1]));
      ++two_checked;
    }
  }
  CHECK(two_checked >= 5);

  int checked = 0, skipped = 0;
  CheckReport hom =
      homogeneity_check(store, spin, PotentialKind::Descendent, u, &checked, &skipped);
  INFO(hom.str());
  CHECK(hom.ok());
  CHECK(checked > 20);
}

TEST_CASE("two-parameter model solve: closed low-order values and the tail") {
  Model eg = model_egdd(12);
  UnstableData u = UnstableData::from_calibration(eg.F, eg.C, eg.depth);
  const Scalar e1 = Scalar::parameter("s1", 2);
  const Scalar e2 = Scalar::parameter("s2", 2);
  const Scalar kappa = e1 + e2;
  const Scalar lam = e1 * e2;

  SolveReport rep;
  CorrelatorStore store = solve_model(eg, 1, 4, 2, &rep);
  INFO(rep.str());
  CHECK(rep.ok());

  // Closed forms of the first one-point values.
  CHECK(stored(store, 0, key({{0, 0}})) == lam);
  CHECK(stored(store, 0, key({{1, 0}})) == rq(1, 2) * kappa * lam);
  CHECK(stored(store, 0, key({{2, 0}})) == rq(1, 6) * (kappa * kappa * lam + lam * lam));
  // The same values through the J-function tail.
  CHECK(u.one_point({0, 0}) == lam);
  CHECK(u.one_point({1, 0}) == rq(1, 2) * kappa * lam);
  for (long k = 0; k <= 4; ++k) {
    Insertions one = key({{k, 0}});
    if (const Scalar* p = store.find(0, one)) CHECK(*p == u.one_point({k, 0}));
  }
  int two_checked = 0;
  for (const auto& [gk, v] : store.entries) {
    const auto& [g, M] = gk;
    if (g == 0 && M.size() == 2) {
      CHECK(v == u.two_point(M[0], M[1]));
      ++two_checked;
    }
  }
  CHECK(two_checked >= 5);

  // Keys made purely of the second label carry no leading insertion.
  bool found_label1 = false;
  for (const std::string& line : rep.unreached)
    if (line.find("no leading insertion") != std::string::npos) found_label1 = true;
  CHECK(found_label1);

  int checked = 0, skipped = 0;
  CheckReport hom =
      homogeneity_check(store, eg, PotentialKind::Descendent, u, &checked, &skipped);
  INFO(hom.str());
  CHECK(hom.ok());
  CHECK(checked > 20);
}

TEST_CASE("one-label family solve: grading and first values") {
  SolveReport rep;
  CorrelatorStore store = solve_gdd(2, 6, 3, &rep);
  INFO(rep.str());
  CHECK(rep.ok());
  CHECK(rep.unreached.empty());

  const Scalar u = Scalar::parameter("u");
  const Scalar v = Scalar::parameter("v");
  CHECK(stored(store, 0, key1({1})) == u * v);
  CHECK(stored(store, 1, key1({1})) == rq(0));

  CheckReport grading = gdd_grading_check(store);
  INFO(grading.str());
  CHECK(grading.ok());

  // Exchanging the two parameters is a symmetry of every value.
  auto uid = ParamRegistry::lookup_param("u");
  auto vid = ParamRegistry::lookup_param("v");
  REQUIRE(uid);
  REQUIRE(vid);
  std::map<int, Scalar> swap_uv{{*uid, Scalar::parameter("v")}, {*vid, Scalar::parameter("u")}};
  for (const auto& [gk, val] : store.entries) CHECK(val.subst(swap_uv) == val);
}
