#pragma once

#include <map>
#include <string>
#include <vector>

#include "vcf/solver.hpp"

namespace vcf {

/// Query for the bipartite-map count N_{k,l}(lambda): k black vertices,
/// l white vertices, and faces with half-perimeters lambda (so the edge
/// count is d = sum lambda).
struct DessinQuery {
  int k = 1;
  int l = 1;
  std::vector<long> lambda;

  long d() const;
  /// Genus from 2g - 2 = d - (k + l + m).  Returns false (no map exists)
  /// when that genus is negative or half-integral.
  bool genus(long& g_out) const;
};

/// Face normalization of the oracle.  The generating function's coefficient
/// N_{k,l}(lambda) is defined by the constraint recursion; whether it equals
/// the transitive pair count divided by d! with or without the multiplicity
/// factorials of lambda is fixed empirically by calibrate_convention.  The
/// default is the calibrated winner: the plain class count |pairs|/d!.
struct DessinConvention {
  bool multiplicity_factor = false;
  std::string str() const;
};

/// Count key of one (sigma, alpha) class: cycle counts of sigma and alpha
/// and the cycle type of sigma*alpha (partition, descending).
struct DessinClassKey {
  int k = 0;
  int l = 0;
  std::vector<long> lambda;
  auto operator<=>(const DessinClassKey&) const = default;
};

/// Exhaustive table for one edge count d: for every (k, l, lambda), the
/// number of pairs (sigma, alpha) in S_d x S_d generating a transitive
/// subgroup, with sigma having k cycles, alpha having l cycles and
/// sigma*alpha of cycle type lambda.  sigma runs over conjugacy-class
/// representatives (classes in parallel) and contributes its class size;
/// alpha runs over all of S_d.  Memoized per d; requires 1 <= d <= 9.
const std::map<DessinClassKey, long long>& dessin_pair_table(int d);

/// Total number of transitive pairs in S_d x S_d (the table summed).
long long transitive_pair_total(int d);

/// The oracle count N_{k,l}(lambda): transitive pair count / d!, times the
/// multiplicity factorials when the convention says so.  Inadmissible genus
/// gives exactly 0.  Throws std::domain_error when d exceeds max_d or the
/// query is malformed (k, l < 1 or a non-positive part).
Scalar count_dessins(const DessinQuery& q, const DessinConvention& conv = {}, int max_d = 7);

/// Reads N_{k,l}(lambda) off a solved one-label store: the coefficient of
/// u^k v^l in the stored derivative, divided by the multiplicity factorials
/// of lambda.  Throws std::domain_error if the value is absent or is not a
/// polynomial in u, v with rational coefficients.
Scalar recursion_count(const CorrelatorStore& gdd_store, const DessinQuery& q);

/// Determines the face normalization by exact comparison of both candidate
/// conventions against the recursion on every admissible query with
/// d <= 3, requiring exactly one candidate to survive; the winner is then
/// re-checked on every query with d <= recheck_d.  Throws std::domain_error
/// with a mismatch table when no candidate (or more than one) survives, or
/// when the re-check fails, or when the store box does not cover d <= 3.
DessinConvention calibrate_convention(const CorrelatorStore& gdd_store, int recheck_d = 5);

/// Compares oracle and recursion on every admissible (k, l, lambda) with
/// sum lambda <= max_d, both ways: every store coefficient is explained by
/// the oracle and every nonzero oracle count appears in the store.
CheckReport dessins_cross_check(const CorrelatorStore& gdd_store, const DessinConvention& conv,
                                int max_d);

/// Inclusion-exclusion consistency of the transitivity filter: the totals
/// T_s for s <= max_d satisfy (d!)^2 = sum_s C(d-1, s-1) T_s ((d-s)!)^2,
/// splitting every pair by the orbit of the first point.
CheckReport dessin_transitivity_check(int max_d);

}  // namespace vcf
