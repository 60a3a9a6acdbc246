#pragma once

#include <string>
#include <vector>

#include "vcf/zseries.hpp"

namespace vcf {

using VecSeries = ZSeries<StateVec>;
using EndSeries = ZSeries<StateEnd>;

/// Graded state space: pairing, grading-operator eigenvalues and the
/// conformal dimension.  The grading operator acts diagonally on the chosen
/// basis and must be anti-self-adjoint for the pairing.
struct StateSpace {
  int dim = 0;
  Pairing eta;
  std::vector<Scalar> mu;  // grading eigenvalues, one per basis vector
  Scalar delta;            // conformal dimension

  StateEnd mu_end() const;
  /// Diagonal operator diag(c + mu_a) applied to v.
  StateVec grade_apply(const Scalar& c, const StateVec& v) const;
  Scalar half_delta() const;
};

/// A Frobenius manifold germ at a fixed base point: multiplication
/// endomorphisms by the basis vectors, the unit, the Euler vector and the
/// constant nilpotent operator entering the grading of the calibration.
struct FrobeniusPoint {
  StateSpace space;
  std::vector<StateEnd> mult;  // mult[a] = (phi_a *)
  StateVec unit;
  StateVec euler;
  StateEnd rho;

  StateEnd mult_by(const StateVec& x) const;
  StateEnd euler_mul() const { return mult_by(euler); }
};

StateVec quantum_mul(const StateVec& x, const StateVec& y, const FrobeniusPoint& F);

/// Accumulates named check failures; empty means all checks passed.
struct CheckReport {
  std::vector<std::string> failures;
  int checks_run = 0;

  bool ok() const { return failures.empty(); }
  void require(bool cond, const std::string& what) {
    ++checks_run;
    if (!cond) failures.push_back(what);
  }
  void merge(const CheckReport& o);
  std::string str() const;
};

/// Structural axioms of the multiplication, grading and rho:
/// commutativity, associativity, unit, Frobenius self-adjointness,
/// anti-self-adjointness of mu, and the rho identities.
CheckReport check_wdvv(const FrobeniusPoint& F);

/// Solves the grading recursion E*v_{k+1} = -(k + mu + delta/2) v_k with
/// E*v_0 = E for the vacuum vector, to the requested order.  Requires (E*)
/// to be invertible over the scalar ring.
VecSeries vacuum_solve(const FrobeniusPoint& F, int order);

/// Extends a seeded principal-part vector by the grading recursion
/// (k - mu - delta/2) nu_k = E*nu_{k-1}.  The seed must determine every
/// component the step operator cannot (kernel directions), and seeded
/// coefficients are cross-checked against the recursion.
VecSeries nu_solve(const FrobeniusPoint& F, const VecSeries& seed, int order);

/// Calibration data at the base point: S-matrix I + S_1 z^{-1} + ...,
/// principal-part vector nu, vacuum vector v, and the polynomial shifts
/// (tau_0 and u) that the associated J-function must reproduce.
struct Calibration {
  EndSeries s_matrix;
  VecSeries nu_vector;
  VecSeries vacuum;
  StateVec shift_tau0;
  VecSeries shift_u;
};

/// One application of the homogeneity operator D_{A} f = A f + (mu+3/2) z f
/// + z^2 f'.  Windows and knowledge flags are propagated honestly.
VecSeries apply_D(const StateEnd& A, const StateSpace& space, const VecSeries& f);

/// S*(-z) as a series: coefficient (-1)^k adj(S_k) at z^{-k}.
EndSeries adjoint_negz(const EndSeries& s, const Pairing& eta);

/// Verifies every base-point identity a calibration must satisfy:
/// symplecticity of S, the grading recursions of S, v and nu, the
/// intertwining S D_rho = D_{E*} S, the J-function polynomial part against
/// the stored shifts, and the grading constraints on u.
CheckReport calibration_verify(const Calibration& C, const FrobeniusPoint& F, int window);

/// J(-z) = -z S*(-z) nu(z), on a window fixed by the calibration depth.
VecSeries j_function(const Calibration& C, const FrobeniusPoint& F, int window);

struct VirasoroIndex {
  long m_nu = -1;
  Scalar c_nu;
};

/// Computes the constraint index: (-1, 0) when nu is polynomial; otherwise
/// requires (delta-3)/2 to be a nonnegative integer m and returns
/// (m, 1/2 (-1)^m (m!)^2 [z^{1-delta}] eta(E, nu(z))).  Throws
/// std::domain_error when neither case applies.
VirasoroIndex virasoro_index(const Calibration& C, const FrobeniusPoint& F);

}  // namespace vcf
