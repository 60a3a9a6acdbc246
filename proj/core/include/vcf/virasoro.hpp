#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>

#include "vcf/frobenius.hpp"

namespace vcf {

/// Index of a formal variable t_k^a: z-degree k >= 0 and state label a.
struct VarId {
  long k = 0;
  int a = 0;
  auto operator<=>(const VarId&) const = default;
};

std::string var_str(const std::string& prefix, const VarId& v);

using VarMap1 = std::map<VarId, Scalar>;
using VarMap2 = std::map<std::pair<VarId, VarId>, Scalar>;

/// Adds c to both mirror entries of a symmetric map (the diagonal entry is
/// hit twice), so that one ordered second-derivative term h^2 c d_v d_w ends
/// up stored in the (h^2/2)-normalized symmetric block.
void add_sym2(VarMap2& q, const VarId& v, const VarId& w, const Scalar& c);

/// The homogeneity operator D_A = A + (mu + 3/2) z + z^2 d/dz acting on
/// state-vector Laurent series; A is rho on the descendent side and the
/// Euler multiplication on the ancestor side.
struct DOperator {
  StateEnd A;
  StateSpace space;
};

/// power-fold application of D_A; exact on any window.
VecSeries apply_D_power(const DOperator& D, const VecSeries& f, int power);

/// Quadratic differential operator in the variables {t_k^a}, stored by
/// hbar-grading blocks with every t-polynomial coefficient expanded in the
/// unshifted variables:
///
///   L = (1/h^2)( 1/2 sum A[v,w] t_v t_w + sum a[v] t_v + alpha )
///       + c0 + sum l[w] d_w + sum D[v,w] t_v d_w
///       + (h^2/2) sum Q[v,w] d_v d_w
///
/// with A (q2quad) and Q (dquad) kept as full symmetric maps.  The shift map
/// records the dilaton shift sigma (t~ = t - sigma) a builder used; it is
/// bookkeeping for display and solvers, not independent operator data (lin
/// already contains the expanded -D^T sigma part).
struct VirasoroNormalForm {
  std::string label;
  std::string var_prefix = "t";
  int dim = 1;    // number of state labels
  long kmax = 0;  // every stored k-index is <= kmax
  long reach = 0; // largest column-minus-row z-degree shift of the exact operator

  VarMap1 shift;   // sigma
  VarMap2 q2quad;  // A, symmetric
  VarMap1 q2lin;   // a
  Scalar q2const;  // alpha
  Scalar const0;   // c0
  VarMap1 lin;     // pure-derivative coefficients
  VarMap2 linear;  // D: coefficient of t_v d_w
  VarMap2 dquad;   // Q, symmetric

  /// Drops every entry carrying a k-index above kc and lowers kmax to kc.
  void truncate_vars(long kc);
  bool is_zero_form() const;
  VirasoroNormalForm& scale(const Scalar& c);
  std::string str() const;
};

/// Entrywise comparison of every hbar block after truncating both forms to
/// the smaller kmax; absent entries count as zero.  Each differing entry is
/// reported.
CheckReport compare_forms(const VirasoroNormalForm& A, const VirasoroNormalForm& B);

/// Exact commutator [A, B].  The result is truncated to the window on which
/// the bracket of the truncations equals the truncation of the exact
/// bracket: min(kmax) - max(reach).  Throws std::domain_error (naming the
/// depth needed) when that window is empty.
VirasoroNormalForm commutator(const VirasoroNormalForm& A, const VirasoroNormalForm& B);

/// Descendent-side operator L_m (m >= -1) of a calibrated model, in the
/// variables t_k^a with 0 <= k <= kmax.  When with_center is set the
/// constant delta_{m,2 m_nu} c_nu / h^2 is added, giving the operator that
/// annihilates the descendent potential.
VirasoroNormalForm build_descendent_L(const FrobeniusPoint& F, const Calibration& C,
                                      long m, long kmax, bool with_center = false);

/// Ancestor-side operator L^tau_m (m >= -1) in the variables s_k^a.  The
/// vacuum series (dilaton shift s(z) - z v(z)) must be known on
/// [0, kmax-1].
VirasoroNormalForm build_ancestor_L(const FrobeniusPoint& F, const VecSeries& vacuum,
                                    long m, long kmax);

/// One-label operator family (m >= 0) in the variables p_1..p_kmax over the
/// parameters u, v:
///   delta_{m,0} uv/h^2 + sum_{k>=1} (p_k - delta_{k,1})(k+m) d_{p_{k+m}}
///   + (u+v) m d_{p_m} + h^2 sum_{k=1}^{m-1} k(m-k) d_{p_k} d_{p_{m-k}}.
VirasoroNormalForm build_gdd_L(long m, long kmax);

/// Substitution datum for restrict_and_rename: old variable = factor * new.
struct VarSubst {
  VarId to;
  Scalar factor;
};

/// Pushes A through a substitution: variables in var_map are renamed and
/// rescaled, variables in freeze are replaced by constants.  Every variable
/// occurring in A must be covered.  A derivative in a frozen direction must
/// have identically vanishing coefficient after freezing, else the
/// substitution is rejected (std::domain_error).  scalar_map, when given, is
/// applied to every coefficient (parameter renaming).
VirasoroNormalForm restrict_and_rename(
    const VirasoroNormalForm& A, const std::map<VarId, VarSubst>& var_map,
    const std::map<VarId, Scalar>& freeze, const std::string& new_prefix,
    int new_dim, long new_kmax,
    const std::function<Scalar(const Scalar&)>& scalar_map = nullptr);

/// The specific substitution taking the two-label operator family over
/// s1, s2 to the one-label family over u, v: t_k^0 = k! p_{k+1}, t_k^1 = 0,
/// s1^2 -> u, s2^2 -> v.
VirasoroNormalForm restrict_egdd_to_gdd(const VirasoroNormalForm& L, long new_kmax);

/// Checks [L_m, L_n] == (m-n) L_{m+n} for all m_lo <= n <= m <= m_hi with
/// m+n >= m_lo, building family members through the callback.
CheckReport commutation_check(const std::function<VirasoroNormalForm(long)>& family,
                              long m_lo, long m_hi);

}  // namespace vcf
