#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vcf/models.hpp"
#include "vcf/virasoro.hpp"

namespace vcf {

/// A correlator key: sorted multiset of insertion variables.
using Insertions = std::vector<VarId>;

/// Returns the key in canonical (sorted) order.
Insertions sorted_key(Insertions key);
/// Total z-degree sum(k_i) of the key.
long key_weight(const Insertions& key);
/// Product of the factorials of the multiplicities of the key's entries.
mpq_class key_mult_factorial(const Insertions& key);
/// Printable form "<g; prefix[k,a] ...>".
std::string key_str(const std::string& prefix, int genus, const Insertions& key);

/// A stable correlator was requested that the store does not hold.
struct MissingEntryError : std::runtime_error {
  int genus;
  Insertions key;
  MissingEntryError(int g, Insertions k, const std::string& prefix);
};

/// Two derivations produced different values for the same correlator.
struct ConflictError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Genus-0 correlators below the stability bound 2g-2+n > 0, derived from a
/// calibration: one-point values from the principal tail of the associated
/// J-function and two-point values from the quadratic form built out of the
/// S-matrix.  The default-constructed object represents identically zero
/// unstable data (appropriate when the S-matrix is the identity and the
/// J-tail vanishes).
class UnstableData {
 public:
  UnstableData() = default;
  static UnstableData from_calibration(const FrobeniusPoint& F, const Calibration& C,
                                       int depth);

  /// <phi_a psi^k>_0: the coefficient of t_k^a in the genus-0 potential.
  Scalar one_point(const VarId& v) const;
  /// <phi_a psi^k, phi_b psi^l>_0 (symmetric in its arguments).
  Scalar two_point(const VarId& v, const VarId& w) const;

  bool is_zero() const { return zero_; }

 private:
  bool zero_ = true;
  int dim_ = 1;
  long one_point_kmax_ = -1;
  long two_point_kmax_ = -1;
  std::vector<StateVec> jtail_;                       // jtail_[k][a] = <phi_a psi^k>_0
  std::map<std::pair<long, long>, StateEnd> wpair_;   // (k,l) -> eta(phi_., W_{k,l} phi_.)
};

/// How lookups of unstable genus-0 keys (n <= 2) are resolved.
enum class LookupPolicy {
  Zero,         // unstable correlators vanish identically
  Calibration,  // resolved through UnstableData
  StoreOnly,    // only explicitly stored values exist; otherwise missing
};

/// Exact correlator table for one model, indexed by genus and insertion
/// multiset, together with its variable domain and truncation box.
struct CorrelatorStore {
  std::string model;             // model tag, e.g. "kw"
  std::string var_prefix = "t";
  int dim = 1;                   // number of state labels
  long level_lo = 0;             // smallest allowed z-degree of a variable
  int max_genus = 0;
  long max_weight = 0;
  int max_insertions = 0;        // insertion cap at the top genus

  std::map<std::pair<int, Insertions>, Scalar> entries;

  /// Lower genera admit more insertions so that every dependency of a
  /// genus-g residual stays inside the box.
  int insertion_cap(int g) const { return max_insertions + 2 * (max_genus - g); }

  bool has(int g, const Insertions& key) const;
  const Scalar* find(int g, const Insertions& key) const;
  /// Inserts or overwrites; rejects keys outside the variable domain and
  /// (for g >= 1) below the stability bound 2g-2+n > 0.  Genus-0 keys with
  /// n <= 2 are admitted explicitly as unstable data.
  void set(int g, Insertions key, Scalar value);
};

/// Store plus the policy resolving unstable genus-0 lookups.
struct EvalContext {
  const CorrelatorStore* store = nullptr;
  const UnstableData* unstable = nullptr;  // consulted by LookupPolicy::Calibration
  LookupPolicy policy = LookupPolicy::Zero;
};

/// Resolves one correlator: stored values win; otherwise unstable keys go
/// through the policy and stable keys raise MissingEntryError.
Scalar correlator_lookup(const EvalContext& ctx, int g, const Insertions& key);

/// The hbar^{2g-2} t^monomial Taylor coefficient of (L e^F)/e^F, where
/// F = sum_g hbar^{2g-2} F_g is read off the store (a stored derivative
/// value divided by the multiplicity factorials is a Taylor coefficient).
/// For an operator annihilating the partition function this vanishes for
/// every g and monomial.  Throws MissingEntryError when a needed stable
/// coefficient is absent and std::domain_error when the operator was built
/// with too small a variable window to cover the monomial.
Scalar residual(const VirasoroNormalForm& L, const EvalContext& ctx, int g,
                const Insertions& monomial);

/// Which insertion can be produced by the pure-derivative part of a
/// constraint: an insertion (k, label) is the leading derivative of the
/// constraint of index k + m_offset, with a constant nonzero coefficient.
struct LeadRule {
  int label = 0;
  long m_offset = 0;
};

/// A solvable constraint family: builder, valid index range, leading-term
/// rule and the unstable-lookup policy of its variable space.
struct Schedule {
  std::string name;
  std::function<VirasoroNormalForm(long m, long kmax)> build;
  long m_lo = -1;  // smallest constraint index that annihilates the potential
  LeadRule lead;
  LookupPolicy policy = LookupPolicy::Zero;
};

/// Descendent-side schedule of a calibrated model ("kw", "rspin<r>",
/// "egdd"), with the central constant included in the operators.
Schedule schedule_for(const Model& model);
/// Schedule of the one-label family over the parameters u, v.
Schedule schedule_gdd();

struct SolveReport {
  int solved = 0;
  int seeds_confirmed = 0;
  int cross_checked = 0;   // residual coefficients verified to vanish
  int cross_skipped = 0;   // residual coefficients leaving the store box
  std::vector<std::string> unreached;  // key and reason, one line each
  CheckReport cross_check;
  bool ok() const { return cross_check.ok(); }
  std::string str() const;
};

/// Fills the store by triangular elimination: keys are processed in
/// lexicographic (genus, weight) order; for each target the leading
/// insertion selects a constraint whose residual at the reduced base
/// monomial is linear in exactly the target, with constant coefficient.
/// Pre-seeded entries are confirmed (exact residual zero) instead of
/// overwritten; disagreement raises ConflictError.  Targets without a
/// leading insertion, or depending on a correlator that was itself
/// unreached, are recorded in the report and skipped.  After elimination a
/// cross-check sweep re-evaluates every constraint coefficient that stays
/// inside the box and requires exact vanishing.
SolveReport solve_triangular(CorrelatorStore& store, const Schedule& sched,
                             const UnstableData& unstable, long cross_check_m_hi = -2);

/// Evaluates every constraint coefficient (m in [sched.m_lo, m_hi], every
/// genus and admissible base monomial of the box) whose dependencies are
/// all available, requiring exact vanishing.  Coefficients that leave the
/// box are counted as skipped, not failures.
CheckReport verify_residuals(const CorrelatorStore& store, const Schedule& sched,
                             const UnstableData& unstable, long m_hi,
                             int* checked = nullptr, int* skipped = nullptr);

/// Store shell for a calibrated model (descendent variables t_k^a).
CorrelatorStore make_model_store(const Model& model, int max_genus, long max_weight,
                                 int max_insertions);
/// Store shell for the one-label family (variables p_1, p_2, ...).
CorrelatorStore make_gdd_store(int max_genus, long max_weight, int max_insertions);

/// End-to-end solve of a calibrated model's descendent correlators.
CorrelatorStore solve_model(const Model& model, int max_genus, long max_weight,
                            int max_insertions, SolveReport* report = nullptr);
/// End-to-end solve of the one-label family.
CorrelatorStore solve_gdd(int max_genus, long max_weight, int max_insertions,
                          SolveReport* report = nullptr);

/// The genus-0 part of the constraint of index m, evaluated at the base
/// point through the calibration alone:
///   -1/2 [z^{-1}] eta( (D^{m+1} z^{-1} J)(-z), J(z) )
/// with D the homogeneity operator of rho and J the associated J-function.
/// For a valid calibrated pair this equals -delta_{m, 2 m_nu} c_nu.
Scalar genus0_residual_via_J(const FrobeniusPoint& F, const Calibration& C, long m,
                             int window);

/// Closed-form right side of the genus-1 relation for the power m:
///   -1/4 sum_{i+j=m} tr(E^i mu E^j mu)
///   -1/24 sum_{i+j=m} tr(E^i mu E^j (1*))
///   +1/24 tr(E^m ((mu + delta/2) 1)*)
/// where E is the Euler multiplication endomorphism, (x*) quantum
/// multiplication by x, and 1 the unit.
Scalar genus1_rhs(const FrobeniusPoint& F, long m);

/// Compares a caller-supplied left side (e.g. a graph-sum evaluation of
/// <E^{m+1}>_{1,1}) against genus1_rhs for each m in [0, m_hi].
CheckReport genus1_constraint_check(const FrobeniusPoint& F,
                                    const std::function<Scalar(long)>& lhs, long m_hi);

/// Which potential a store expands: the descendent one (variables t, dilaton
/// shift from tau_0 and u, grading mixed by rho) or the ancestor one
/// (variables s, dilaton shift from the vacuum vector, grading mixed by the
/// Euler multiplication).
enum class PotentialKind { Descendent, Ancestor };

/// Verifies the homogeneity (grading) relation on every stored key of each
/// genus: the Euler field derivative of F_g equals (delta-3)(g-1) F_g plus
/// the genus-0 quadratic inhomogeneity and, at genus 1, the constant
/// <E>_{1,1} (checked against genus1_rhs(F, 0)).  Keys whose relation needs
/// correlators outside the store are skipped and counted.
CheckReport homogeneity_check(const CorrelatorStore& store, const Model& model,
                              PotentialKind kind, const UnstableData& unstable,
                              int* checked = nullptr, int* skipped = nullptr);

/// Grading of the one-label family: every stored value is a polynomial in
/// u, v whose monomials u^j v^l all satisfy 2g - 2 = weight - (j + l + n).
CheckReport gdd_grading_check(const CorrelatorStore& store);

}  // namespace vcf
