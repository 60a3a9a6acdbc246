#pragma once

#include <utility>
#include <vector>

#include "vcf/models.hpp"
#include "vcf/solver.hpp"

namespace vcf {

/// Idempotent frame of a semisimple base-point multiplication (dimensions 1
/// and 2).  idem[a] are the algebra idempotents in the flat basis, u[a] the
/// eigenvalues of multiplication by the Euler vector and delta[a] the inverse
/// square norms 1/eta(e_a, e_a).  All frame data stays inside the exact
/// scalar ring: matrices in the normalized frame e_a * delta[a]^{1/2} are
/// converted entrywise with the rational ratios delta[b]/sq_delta_prod on the
/// off-diagonal, so no square root of an individual delta[a] is ever formed.
struct CanonicalFrame {
  int dim = 0;
  std::vector<StateVec> idem;
  std::vector<Scalar> u;
  std::vector<Scalar> delta;      // invertible by construction
  std::vector<Scalar> delta_inv;  // eta(e_a, e_a)
  Scalar sq_delta_prod;           // fixed square root of delta[0]*delta[1]; 1 in dim 1
  StateEnd from_frame;            // columns are the idempotents
  StateEnd to_frame;              // from_frame^{-1}

  /// Components of a flat vector along the idempotents.
  StateVec frame_components(const StateVec& flat) const { return to_frame.apply(flat); }
  /// Matrix of a flat-basis operator in the normalized frame.
  StateEnd to_normalized(const StateEnd& flat_op) const;
  /// Normalized-frame matrix of an operator, rewritten in the idempotent
  /// frame (components along the unnormalized idempotents).
  StateEnd normalized_to_idem(const StateEnd& nf_op) const;
};

/// Extracts the idempotent frame of the multiplication at the base point.
/// Throws std::domain_error when the dimension exceeds 2, when the Euler
/// multiplication has a double eigenvalue, or when a needed scalar is not
/// invertible or not a perfect square inside the ring (the supported models
/// keep every frame quantity rational in the declared parameters).
CanonicalFrame canonical_frame(const FrobeniusPoint& F);

/// Solves [R_{m+1}, diag(u)] = (m + mu) R_m with R_0 = I in the normalized
/// frame.  The diagonal of each R_{m+1} is fixed by the next-level
/// consistency condition ((m+1+mu) R_{m+1})_{aa} = 0, which makes the
/// solution unique for a homogeneous theory.  Returns coefficients on
/// [0, order].  Throws std::domain_error on an eigenvalue collision or a
/// failed consistency condition.
EndSeries solve_R(const FrobeniusPoint& F, const CanonicalFrame& frame, int order);

/// Verifies sum_{a+b=m} (-1)^a R_a^T R_b == delta_{m,0} I for m in [0, hi],
/// i.e. R^*(-z) R(z) = I on the known window.
CheckReport r_symplectic_check(const EndSeries& rbar);

/// Reduced dilaton-shift vector in idempotent-frame components,
/// t(z) = z*(unit - R(z)^{-1} v(z)) on the window [1, order].  The full
/// shift adds z*(1bar - unit), whose idempotent components are the
/// irrational defects delta[a]^{1/2} - 1; that part is never materialized:
/// the graph sum absorbs it analytically into the per-vertex normalization
/// (see ancestor_correlator).  The z^1 coefficient of the reduced vector
/// must vanish (v_0 = unit); otherwise std::domain_error.
VecSeries t_vector(const CanonicalFrame& frame, const EndSeries& rbar,
                   const VecSeries& vacuum_flat, int order);

/// Edge coefficient matrices V_{k,l} (normalized frame) defined by
/// (z+w) V(z,w) = I - R^T(-z) R(-w), for all k,l >= 0 with k+l <= kmax.
/// Requires rbar known on [0, kmax+1].  Entries with k+l > kmax are left
/// empty (dimension 0).
std::vector<std::vector<StateEnd>> edge_table(const EndSeries& rbar, int kmax);

/// Connected stable graph: vertices carry a genus and the labels of the
/// inputs they hold; edges may be loops.  aut is the order of the
/// automorphism group (decoration-preserving vertex permutations times the
/// interchange factors of parallel edges and loops).
struct StableGraph {
  struct Vertex {
    int genus = 0;
    std::vector<int> legs;  // sorted input labels
  };
  std::vector<Vertex> vertices;
  std::vector<std::pair<int, int>> edges;  // (u, v) with u <= v; loops u == v
  long aut = 1;
};

/// All isomorphism classes of connected stable graphs of type (g, n) with
/// legs labeled 0..n-1: total genus = sum of vertex genera plus the first
/// Betti number, every vertex stable (2g_v - 2 + n_v > 0).  Deterministic
/// order, memoized.  Requires 2g - 2 + n > 0.
const std::vector<StableGraph>& enumerate_stable_graphs(int g, int n);

/// One insertion of a reconstructed correlator: a flat state vector carrying
/// a psi power.
struct AncestorInsertion {
  StateVec vec;
  long psi = 0;
};

/// Ancestor correlator of the reconstructed theory as a sum over stable
/// graphs: each vertex is a one-variable intersection integral read from kw,
/// legs carry R^*(-psi) acting on the input, edges carry the V coefficients
/// and extra insertions carry t (its z^1 part resummed into the vertex
/// normalization: a vertex of genus h and valence n on the idempotent axis a
/// contributes delta[a]^{h-1}, and each edge contributes delta[a] or
/// sq_delta_prod according to whether its two sides share the axis).
/// Unstable inputs (2g - 2 + n <= 0) return 0 by definition.  Throws
/// MissingEntryError when kw lacks a needed vertex value and
/// std::domain_error when the series order is too small for the type (g, n).
Scalar ancestor_correlator(const FrobeniusPoint& F, const CanonicalFrame& frame,
                           const EndSeries& rbar, const VecSeries& t_red,
                           const CorrelatorStore& kw, int g,
                           const std::vector<AncestorInsertion>& insertions);

/// Descendent correlator obtained from ancestors by dressing every insertion
/// with the calibration: sum over i_j in [0, psi_j] of the ancestor value at
/// psi powers psi_j - i_j with vectors S_{i_j} x_j (contributions with
/// negative powers vanish and are dropped).  Requires a stable (g, n).
Scalar descendent_correlator(const FrobeniusPoint& F, const Calibration& C,
                             const CanonicalFrame& frame, const EndSeries& rbar,
                             const VecSeries& t_red, const CorrelatorStore& kw, int g,
                             const std::vector<AncestorInsertion>& insertions);

/// Frame, rotation series and reduced shift bundled for a model.
struct ReconstructionData {
  CanonicalFrame frame;
  EndSeries rbar;
  VecSeries t_red;
  int order = 0;
};

/// Builds the frame, solves the rotation recursion to the requested order
/// and forms the reduced shift from the model vacuum (which must be known on
/// [0, order-1]).
ReconstructionData build_reconstruction(const Model& model, int order);

/// Fills a complete ancestor store (variables s_k^a) over the domain
/// (genus <= max_genus, weight <= max_weight, insertion caps of the store)
/// by graph summation; stable keys only.  Values are computed independently
/// per key (deterministically parallel).
CorrelatorStore reconstruct_ancestor_store(const Model& model, const ReconstructionData& rd,
                                           const CorrelatorStore& kw, int max_genus,
                                           long max_weight, int max_insertions);

/// Same domain, descendent values (calibration dressing of the graph sums);
/// variables t_k^a.
CorrelatorStore reconstruct_descendent_store(const Model& model, const ReconstructionData& rd,
                                             const CorrelatorStore& kw, int max_genus,
                                             long max_weight, int max_insertions);

}  // namespace vcf
