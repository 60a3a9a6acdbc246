#include "vcf/frobenius.hpp"

#include <sstream>
#include <stdexcept>

namespace vcf {

namespace {

const mpq_class kHalf(1, 2);

/// Requires the scalar to be an exact rational integer.
long scalar_to_long(const Scalar& s, const char* what) {
  if (!s.is_rational()) throw std::domain_error(std::string(what) + " is not rational");
  GaussianRational q = s.rational_value();
  if (!q.is_real() || q.re().get_den() != 1)
    throw std::domain_error(std::string(what) + " is not an integer");
  if (!q.re().get_num().fits_slong_p())
    throw std::domain_error(std::string(what) + " out of range");
  return q.re().get_num().get_si();
}

}  // namespace

StateEnd StateSpace::mu_end() const {
  StateEnd m(static_cast<size_t>(dim));
  for (int a = 0; a < dim; ++a) m.at(a, a) = mu[static_cast<size_t>(a)];
  return m;
}

StateVec StateSpace::grade_apply(const Scalar& c, const StateVec& v) const {
  StateVec out(static_cast<size_t>(dim));
  for (int a = 0; a < dim; ++a)
    out[static_cast<size_t>(a)] = (c + mu[static_cast<size_t>(a)]) * v[static_cast<size_t>(a)];
  return out;
}

Scalar StateSpace::half_delta() const { return Scalar(GaussianRational(kHalf)) * delta; }

StateEnd FrobeniusPoint::mult_by(const StateVec& x) const {
  StateEnd out(x.dim());
  for (size_t a = 0; a < x.dim(); ++a)
    if (!x[a].is_zero()) out += x[a] * mult[a];
  return out;
}

StateVec quantum_mul(const StateVec& x, const StateVec& y, const FrobeniusPoint& F) {
  return F.mult_by(x).apply(y);
}

void CheckReport::merge(const CheckReport& o) {
  checks_run += o.checks_run;
  failures.insert(failures.end(), o.failures.begin(), o.failures.end());
}

std::string CheckReport::str() const {
  std::ostringstream os;
  os << checks_run << " checks, " << failures.size() << " failure(s)";
  for (const auto& f : failures) os << "\n  FAIL: " << f;
  return os.str();
}

CheckReport check_wdvv(const FrobeniusPoint& F) {
  CheckReport rep;
  const int n = F.space.dim;
  const Pairing& eta = F.space.eta;

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        rep.require(F.mult[static_cast<size_t>(a)].at(static_cast<size_t>(c),
                                                      static_cast<size_t>(b)) ==
                        F.mult[static_cast<size_t>(b)].at(static_cast<size_t>(c),
                                                          static_cast<size_t>(a)),
                    "product not commutative at pair (" + std::to_string(a) + "," +
                        std::to_string(b) + ") component " + std::to_string(c));

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      StateVec eb(static_cast<size_t>(n));
      eb[static_cast<size_t>(b)] = Scalar(1);
      StateEnd lhs = F.mult_by(F.mult[static_cast<size_t>(a)].apply(eb));
      StateEnd rhs = F.mult[static_cast<size_t>(a)] * F.mult[static_cast<size_t>(b)];
      rep.require(lhs == rhs, "product not associative at pair (" + std::to_string(a) + "," +
                                  std::to_string(b) + ")");
    }

  rep.require(F.mult_by(F.unit) == StateEnd::identity(static_cast<size_t>(n)),
              "unit is not a multiplicative identity");

  for (int a = 0; a < n; ++a)
    rep.require(eta.is_self_adjoint(F.mult[static_cast<size_t>(a)]),
                "multiplication by basis vector " + std::to_string(a) +
                    " is not self-adjoint for the pairing");

  rep.require(eta.is_anti_self_adjoint(F.space.mu_end()),
              "grading operator is not anti-self-adjoint for the pairing");

  rep.require(F.rho.pow(static_cast<unsigned>(n)).is_zero(), "rho is not nilpotent");
  {
    StateEnd mu = F.space.mu_end();
    rep.require(mu * F.rho - F.rho * mu == F.rho, "[mu, rho] != rho");
  }
  rep.require(eta.is_self_adjoint(F.rho), "rho is not self-adjoint for the pairing");

  return rep;
}

VecSeries vacuum_solve(const FrobeniusPoint& F, int order) {
  const StateEnd einv = F.euler_mul().inverse();
  VecSeries out(StateVec(static_cast<size_t>(F.space.dim)), 0, order, /*zero_below=*/true,
                /*zero_above=*/false);
  out.ref(0) = einv.apply(F.euler);
  for (int k = 0; k < order; ++k) {
    StateVec w = F.space.grade_apply(Scalar(k) + F.space.half_delta(), out.at(k));
    out.ref(k + 1) = einv.apply(-w);
  }
  return out;
}

VecSeries nu_solve(const FrobeniusPoint& F, const VecSeries& seed, int order) {
  const int n = F.space.dim;
  if (seed.hi() != -1 || !seed.zero_above())
    throw std::invalid_argument("nu seed must cover z^{-1} and vanish above it");
  const StateEnd em = F.euler_mul();
  VecSeries out(StateVec(static_cast<size_t>(n)), -order, -1, /*zero_below=*/false,
                /*zero_above=*/true);

  // The z^{-1} layer is fixed by (mu + delta/2 - 1) nu_1 = E.
  if (!(F.space.grade_apply(F.space.half_delta() - Scalar(1), seed.at(-1)) == F.euler))
    throw std::domain_error("nu seed violates the leading grading constraint");
  out.ref(-1) = seed.at(-1);

  for (int k = 2; k <= order; ++k) {
    StateVec rhs = em.apply(out.at(-(k - 1)));
    bool seeded = seed.lo() <= -k;
    StateVec val(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
      Scalar step = Scalar(k) - F.space.mu[static_cast<size_t>(a)] - F.space.half_delta();
      if (step.is_zero()) {
        if (!rhs[static_cast<size_t>(a)].is_zero())
          throw std::domain_error("nu recursion inconsistent in a kernel direction at order " +
                                  std::to_string(k));
        if (!seeded)
          throw std::domain_error("nu recursion underdetermined at order " + std::to_string(k) +
                                  ", component " + std::to_string(a) + "; seed required");
        val[static_cast<size_t>(a)] = seed.at(-k)[static_cast<size_t>(a)];
      } else {
        val[static_cast<size_t>(a)] = step.inverse() * rhs[static_cast<size_t>(a)];
        if (seeded && !(val[static_cast<size_t>(a)] == seed.at(-k)[static_cast<size_t>(a)]))
          throw std::domain_error("nu seed disagrees with the recursion at order " +
                                  std::to_string(k));
      }
    }
    out.ref(-k) = val;
  }
  return out;
}

VecSeries apply_D(const StateEnd& A, const StateSpace& space, const VecSeries& f) {
  const StateVec zero(static_cast<size_t>(space.dim));
  // A f: same window and flags.
  VecSeries t1(zero, f.lo(), f.hi(), f.zero_below(), f.zero_above());
  for (int k = f.lo(); k <= f.hi(); ++k) t1.ref(k) = A.apply(f.at(k));
  // (mu + 3/2) z f + z^2 f': coefficient (mu + 3/2 + k) f_k at z^{k+1}.
  VecSeries t2(zero, f.lo() + 1, f.hi() + 1, f.zero_below(), f.zero_above());
  for (int k = f.lo(); k <= f.hi(); ++k)
    t2.ref(k + 1) =
        space.grade_apply(Scalar(GaussianRational(mpq_class(3, 2))) + Scalar(k), f.at(k));
  return t1 + t2;
}

EndSeries adjoint_negz(const EndSeries& s, const Pairing& eta) {
  EndSeries out(s.zero_element(), s.lo(), s.hi(), s.zero_below(), s.zero_above());
  for (int k = s.lo(); k <= s.hi(); ++k) {
    StateEnd m = eta.adjoint(s.at(k));
    out.ref(k) = (k % 2 != 0) ? -m : m;
  }
  return out;
}

VecSeries j_function(const Calibration& C, const FrobeniusPoint& F, int window) {
  EndSeries sstar = adjoint_negz(C.s_matrix, F.space.eta);
  long hi = std::max<long>(0, C.shift_u.hi());
  // Extend the computed window to the product's natural top degree whenever
  // that is finite, so the result is flagged exact above its top coefficient.
  long nat_hi = sstar.support_hi() + C.nu_vector.support_hi();
  if (nat_hi < detail::kPosInf && nat_hi > hi) hi = nat_hi;
  VecSeries p = series_apply(sstar, C.nu_vector, -window, static_cast<int>(hi));
  return -p.shift(1);
}

VirasoroIndex virasoro_index(const Calibration& C, const FrobeniusPoint& F) {
  const VecSeries& nu = C.nu_vector;
  bool nu_polynomial = nu.zero_below() && nu.zero_above() && nu.lo() >= 0;
  if (nu_polynomial) return VirasoroIndex{-1, Scalar(0)};

  long delta = scalar_to_long(F.space.delta, "conformal dimension");
  if (delta < 3 || (delta - 3) % 2 != 0)
    throw std::domain_error("no constraint index: (delta-3)/2 is not a nonnegative integer");
  long m = (delta - 3) / 2;

  // c = 1/2 (-1)^m (m!)^2 [z^{1-delta}] eta(E, nu(z)); the coefficient picks
  // out nu_{2m+2} since E is constant.
  Scalar coeff = F.space.eta.eval(F.euler, nu.at(static_cast<int>(1 - delta)));
  mpq_class mf = factorial(static_cast<unsigned>(m));
  mpq_class pref = mf * mf * kHalf;
  if (m % 2 != 0) pref = -pref;
  return VirasoroIndex{m, Scalar(GaussianRational(pref)) * coeff};
}

CheckReport calibration_verify(const Calibration& C, const FrobeniusPoint& F, int window) {
  CheckReport rep;
  const int n = F.space.dim;
  const StateEnd id = StateEnd::identity(static_cast<size_t>(n));
  const StateEnd em = F.euler_mul();
  const StateEnd mu = F.space.mu_end();
  const EndSeries& S = C.s_matrix;

  rep.require(S.known(0) && S.at(0) == id, "S-matrix does not start at the identity");

  // Symplectic condition: S*(-z) S(z) = I on the window.
  {
    EndSeries sstar = adjoint_negz(S, F.space.eta);
    EndSeries prod = series_mul(sstar, S, -window, 0);
    for (int k = -window; k <= 0; ++k)
      rep.require(prod.at(k) == (k == 0 ? id : StateEnd(static_cast<size_t>(n))),
                  "symplectic condition fails at z^" + std::to_string(k));
  }

  // Grading recursion of S: k S_k + S_k mu - mu S_k = (E*) S_{k-1} - S_{k-1} rho.
  for (int k = 1; k <= window; ++k) {
    if (!S.known(-k) || !S.known(-(k - 1))) {
      rep.require(false, "S-matrix window too shallow for grading recursion at order " +
                             std::to_string(k));
      break;
    }
    StateEnd sk = S.at(-k);
    StateEnd lhs = Scalar(k) * sk + sk * mu - mu * sk;
    StateEnd rhs = em * S.at(-(k - 1)) - S.at(-(k - 1)) * F.rho;
    rep.require(lhs == rhs, "S-matrix grading recursion fails at order " + std::to_string(k));
  }

  // Intertwining property S(z) D_rho = D_{E*} S(z), checked through series
  // composition (independently of the recursion above).
  for (int a = 0; a < n; ++a) {
    StateVec ea(static_cast<size_t>(n));
    ea[static_cast<size_t>(a)] = Scalar(1);
    VecSeries unit_series(StateVec(static_cast<size_t>(n)), 0, 0, true, true);
    unit_series.ref(0) = ea;
    VecSeries rhs_in = apply_D(F.rho, F.space, unit_series);  // window [0,1], fully known
    VecSeries rhs = series_apply(S, rhs_in, -window + 1, 1);
    VecSeries sa = series_apply(S, unit_series, -window, 0);
    VecSeries lhs = apply_D(em, F.space, sa);
    for (int k = -window + 1; k <= 1; ++k)
      rep.require(lhs.known(k) && rhs.known(k) && lhs.at(k) == rhs.at(k),
                  "intertwining S D_rho = D_{E*} S fails at basis " + std::to_string(a) +
                      ", z^" + std::to_string(k));
  }

  // Vacuum grading recursion.
  const VecSeries& v = C.vacuum;
  rep.require(v.known(0) && v.at(0) == F.unit, "vacuum leading term is not the unit");
  rep.require(v.known(0) && em.apply(v.at(0)) == F.euler, "vacuum leading term: (E*) v_0 != E");
  for (int k = 0; k + 1 <= v.hi(); ++k) {
    StateVec lhs = em.apply(v.at(k + 1));
    StateVec rhs = -F.space.grade_apply(Scalar(k) + F.space.half_delta(), v.at(k));
    rep.require(lhs == rhs, "vacuum grading recursion fails at order " + std::to_string(k + 1));
  }

  // nu grading recursion; a polynomial nu must equal the vacuum instead.
  const VecSeries& nu = C.nu_vector;
  bool nu_polynomial = nu.zero_below() && nu.zero_above() && nu.lo() >= 0;
  if (nu_polynomial) {
    for (int k = nu.lo(); k <= nu.hi(); ++k)
      rep.require(v.known(k) && nu.at(k) == v.at(k),
                  "polynomial nu differs from the vacuum at z^" + std::to_string(k));
  } else {
    rep.require(nu.known(-1) &&
                    F.space.grade_apply(F.space.half_delta() - Scalar(1), nu.at(-1)) == F.euler,
                "nu leading grading constraint fails");
    for (int k = 2; -k >= nu.lo(); ++k) {
      // (k - mu - delta/2) nu_k = (E*) nu_{k-1}
      StateVec lhs = -F.space.grade_apply(F.space.half_delta() - Scalar(k), nu.at(-k));
      StateVec rhs = em.apply(nu.at(-(k - 1)));
      rep.require(lhs == rhs, "nu grading recursion fails at order " + std::to_string(k));
    }
  }

  // Dilaton-shift consistency: u(z) equals the polynomial part of S*(-z) nu(z).
  const VecSeries& u = C.shift_u;
  rep.require(u.zero_below() && u.zero_above() && (u.empty() || u.lo() >= 0),
              "shift u must be a fully known polynomial");
  {
    EndSeries sstar = adjoint_negz(S, F.space.eta);
    int uhi = std::max(0, u.hi());
    VecSeries p = series_apply(sstar, C.nu_vector, 0, uhi);
    for (int k = 0; k <= uhi; ++k)
      rep.require(p.known(k) && u.known(k) && p.at(k) == u.at(k),
                  "shift u does not match [S*(-z) nu(z)]_+ at z^" + std::to_string(k));
  }

  // Grading constraint on u: (k + mu + delta/2) u_k = 0 for every k.
  for (int k = std::max(0, u.lo()); k <= u.hi(); ++k)
    rep.require(F.space.grade_apply(Scalar(k) + F.space.half_delta(), u.at(k)).is_zero(),
                "grading constraint on u fails at z^" + std::to_string(k));

  // rho u_0 must equal the grade-one part of E.
  {
    StateVec u0 = u.known(0) ? u.at(0) : StateVec(static_cast<size_t>(n));
    StateVec proj(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a)
      if (F.space.mu[static_cast<size_t>(a)] + F.space.half_delta() == Scalar(1))
        proj[static_cast<size_t>(a)] = F.euler[static_cast<size_t>(a)];
    rep.require(F.rho.apply(u0) == proj, "rho u_0 does not match the grade-one part of E");
  }

  // J-function polynomial part must reproduce the stored shifts:
  // [J(-z)]_+ = -tau_0 - z u(z) at the base point.
  {
    VecSeries j = j_function(C, F, window);
    rep.require(j.known(0) && j.at(0) == -C.shift_tau0,
                "J-function z^0 part does not match -tau_0");
    for (int k = 1; k <= std::max(0, u.hi()) + 1; ++k)
      rep.require(j.known(k) && j.at(k) == -u.at(k - 1),
                  "J-function polynomial part does not match -z u(z) at z^" + std::to_string(k));
  }

  // The constraint-index corollary: D^{m+1} applied to nu and to v agree for
  // every m at or above the index.  Checked on the full overlap window.
  try {
    VirasoroIndex idx = virasoro_index(C, F);
    long m0 = std::max<long>(0, idx.m_nu);
    for (long m = m0; m <= m0 + 1; ++m) {
      VecSeries dn = nu;
      VecSeries dv = v;
      for (long i = 0; i <= m; ++i) {
        dn = apply_D(em, F.space, dn);
        dv = apply_D(em, F.space, dv);
      }
      long lo = std::max(dn.known_lo(), dv.known_lo());
      long hi = std::min(dn.known_hi(), dv.known_hi());
      // Outside both stored windows, known coefficients are zero on both
      // sides, so the comparison is vacuous there; clip to the stored union.
      lo = std::max(lo, static_cast<long>(std::min(dn.lo(), dv.lo())));
      hi = std::min(hi, static_cast<long>(std::max(dn.hi(), dv.hi())));
      rep.require(lo <= hi, "no overlap window for the D-power comparison of nu and v");
      for (long k = lo; k <= hi; ++k)
        rep.require(dn.at(static_cast<int>(k)) == dv.at(static_cast<int>(k)),
                    "D^" + std::to_string(m + 1) + " nu != D^" + std::to_string(m + 1) +
                        " v at z^" + std::to_string(k));
    }
  } catch (const std::domain_error& e) {
    rep.require(false, std::string("constraint index unavailable: ") + e.what());
  }

  return rep;
}

}  // namespace vcf
