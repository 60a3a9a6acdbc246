#include "vcf/virasoro.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "vcf/rational.hpp"

namespace vcf {

namespace {

const Scalar kZero{};

VarId var_min() {
  return VarId{std::numeric_limits<long>::min(), std::numeric_limits<int>::min()};
}

void prune1(VarMap1& m) {
  for (auto it = m.begin(); it != m.end();) {
    if (it->second.is_zero())
      it = m.erase(it);
    else
      ++it;
  }
}

void prune2(VarMap2& m) {
  for (auto it = m.begin(); it != m.end();) {
    if (it->second.is_zero())
      it = m.erase(it);
    else
      ++it;
  }
}

void v_axpy(VarMap1& dst, const VarMap1& src, const Scalar& c) {
  for (const auto& [v, x] : src) dst[v] += c * x;
}

void m2_axpy(VarMap2& dst, const VarMap2& src, const Scalar& c) {
  for (const auto& [vw, x] : src) dst[vw] += c * x;
}

VarMap2 m2_transpose(const VarMap2& m) {
  VarMap2 r;
  for (const auto& [vw, x] : m) r[{vw.second, vw.first}] = x;
  return r;
}

/// (XY)_{vw} = sum_j X_{vj} Y_{jw}; rows of Y are contiguous in the map.
VarMap2 m2_mul(const VarMap2& x, const VarMap2& y) {
  VarMap2 r;
  for (const auto& [vj, xv] : x) {
    auto it = y.lower_bound({vj.second, var_min()});
    for (; it != y.end() && it->first.first == vj.second; ++it)
      r[{vj.first, it->first.second}] += xv * it->second;
  }
  prune2(r);
  return r;
}

/// (X y)_v = sum_w X_{vw} y_w.
VarMap1 m2_vec(const VarMap2& x, const VarMap1& y) {
  VarMap1 r;
  for (const auto& [vw, xv] : x) {
    auto it = y.find(vw.second);
    if (it != y.end()) r[vw.first] += xv * it->second;
  }
  prune1(r);
  return r;
}

/// (X^T y)_w = sum_v X_{vw} y_v.
VarMap1 m2_t_vec(const VarMap2& x, const VarMap1& y) {
  VarMap1 r;
  for (const auto& [vw, xv] : x) {
    auto it = y.find(vw.first);
    if (it != y.end()) r[vw.second] += xv * it->second;
  }
  prune1(r);
  return r;
}

Scalar m2_trace_mul(const VarMap2& x, const VarMap2& y) {
  Scalar r;
  for (const auto& [vw, xv] : x) {
    auto it = y.find({vw.second, vw.first});
    if (it != y.end()) r += xv * it->second;
  }
  return r;
}

Scalar v_dot(const VarMap1& x, const VarMap1& y) {
  Scalar r;
  for (const auto& [v, xv] : x) {
    auto it = y.find(v);
    if (it != y.end()) r += xv * it->second;
  }
  return r;
}

void trunc1(VarMap1& m, long kc) {
  for (auto it = m.begin(); it != m.end();)
    it = (it->first.k > kc) ? m.erase(it) : std::next(it);
}

void trunc2(VarMap2& m, long kc) {
  for (auto it = m.begin(); it != m.end();)
    it = (it->first.first.k > kc || it->first.second.k > kc) ? m.erase(it) : std::next(it);
}

/// D^power applied to the monomial series x z^j, exact window [j, j+power].
VecSeries d_power_vec(const DOperator& d, const StateVec& x, long j, int power) {
  StateVec zero(static_cast<size_t>(d.space.dim));
  VecSeries f(zero, static_cast<int>(j), static_cast<int>(j), true, true);
  f.ref(static_cast<int>(j)) = x;
  return apply_D_power(d, f, power);
}

StateVec basis_vec(int dim, int a) {
  StateVec e(static_cast<size_t>(dim));
  e[static_cast<size_t>(a)] = Scalar(1);
  return e;
}

/// phi^a: the eta-dual basis vector, column a of the inverse Gram matrix.
StateVec dual_basis_vec(const StateSpace& sp, int a) {
  StateVec e(static_cast<size_t>(sp.dim));
  const StateEnd& gi = sp.eta.gram_inverse();
  for (int c = 0; c < sp.dim; ++c)
    e[static_cast<size_t>(c)] = gi.at(static_cast<size_t>(c), static_cast<size_t>(a));
  return e;
}

/// Symmetrized matrix of the quadratic form x -> 1/2 eta(P x, x):
/// A = 1/2 (P^T G + G P).
StateEnd quadratic_form_matrix(const StateSpace& sp, const StateEnd& p) {
  const StateEnd& g = sp.eta.gram();
  StateEnd m = p.transpose() * g;
  StateEnd a(static_cast<size_t>(sp.dim));
  const Scalar half(GaussianRational(1, 2));
  for (int i = 0; i < sp.dim; ++i)
    for (int j = 0; j < sp.dim; ++j)
      a.at(static_cast<size_t>(i), static_cast<size_t>(j)) =
          half * (m.at(static_cast<size_t>(i), static_cast<size_t>(j)) +
                  m.at(static_cast<size_t>(j), static_cast<size_t>(i)));
  return a;
}

/// Shared assembly of the descendent/ancestor families from a homogeneity
/// operator, a quadratic-block endomorphism P = A^{m+1}, a constant block
/// and a dilaton shift.
VirasoroNormalForm build_from_d(const DOperator& d, long m, long kmax,
                                const VarMap1& sigma, const Scalar& const0,
                                const std::string& prefix, const std::string& label) {
  const int dim = d.space.dim;
  VirasoroNormalForm L;
  L.label = label;
  L.var_prefix = prefix;
  L.dim = dim;
  L.kmax = kmax;
  L.reach = m + 1;
  L.shift = sigma;
  L.const0 = const0;

  // 1/h^2 block: 1/2 eta(A^{m+1} t~_0, t~_0) expanded in t.
  StateEnd p = d.A.pow(static_cast<unsigned>(m + 1));
  StateEnd a2 = quadratic_form_matrix(d.space, p);
  StateVec s0(static_cast<size_t>(dim));
  for (int a = 0; a < dim; ++a) {
    auto it = sigma.find(VarId{0, a});
    if (it != sigma.end()) s0[static_cast<size_t>(a)] = it->second;
  }
  const Scalar half(GaussianRational(1, 2));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const Scalar& aij = a2.at(static_cast<size_t>(i), static_cast<size_t>(j));
      if (aij.is_zero()) continue;
      L.q2quad[{VarId{0, i}, VarId{0, j}}] += aij;
      L.q2lin[VarId{0, i}] -= aij * s0[static_cast<size_t>(j)];
      L.q2const += half * aij * s0[static_cast<size_t>(i)] * s0[static_cast<size_t>(j)];
    }
  prune2(L.q2quad);
  prune1(L.q2lin);

  // t d block: coefficients of D^{m+1} phi_a z^{k-1}, columns clipped to
  // [0, kmax]; the expanded pure-derivative block picks up -sigma times the
  // same coefficients.
  for (long k = 0; k <= kmax; ++k)
    for (int a = 0; a < dim; ++a) {
      VecSeries cols =
          d_power_vec(d, basis_vec(dim, a), k - 1, static_cast<int>(m + 1));
      Scalar sig;
      if (auto it = sigma.find(VarId{k, a}); it != sigma.end()) sig = it->second;
      for (int l = std::max(0, cols.lo()); l <= std::min<long>(kmax, cols.hi()); ++l) {
        const StateVec& w = cols.at(static_cast<int>(l));
        for (int b = 0; b < dim; ++b) {
          const Scalar& c = w[static_cast<size_t>(b)];
          if (c.is_zero()) continue;
          L.linear[{VarId{k, a}, VarId{l, b}}] += c;
          if (!sig.is_zero()) L.lin[VarId{l, b}] -= sig * c;
        }
      }
    }
  prune2(L.linear);
  prune1(L.lin);

  // h^2/2 block: ordered term (-1)^{k+1} [D^{m+1} phi^a z^{-k-2}]_{l,c} on
  // d_{t_k^a} d_{t_l^c}, for 0 <= k <= m-1.
  for (long k = 0; k + 1 <= m; ++k)
    for (int a = 0; a < dim; ++a) {
      VecSeries cols =
          d_power_vec(d, dual_basis_vec(d.space, a), -k - 2, static_cast<int>(m + 1));
      const Scalar sign((k % 2 == 0) ? GaussianRational(-1) : GaussianRational(1));
      for (int l = std::max(0, cols.lo()); l <= cols.hi(); ++l) {
        const StateVec& w = cols.at(static_cast<int>(l));
        for (int c = 0; c < dim; ++c) {
          const Scalar& x = w[static_cast<size_t>(c)];
          if (x.is_zero()) continue;
          add_sym2(L.dquad, VarId{k, a}, VarId{static_cast<long>(l), c},
                   Scalar(GaussianRational(1, 2)) * sign * x);
        }
      }
    }
  prune2(L.dquad);
  return L;
}

std::string pair_str(const std::string& prefix, const std::pair<VarId, VarId>& vw) {
  return var_str(prefix, vw.first) + "," + var_str(prefix, vw.second);
}

void compare_map1(CheckReport& rep, const std::string& what, const std::string& prefix,
                  const VarMap1& a, const VarMap1& b) {
  auto get = [](const VarMap1& m, const VarId& v) -> const Scalar& {
    auto it = m.find(v);
    return it == m.end() ? kZero : it->second;
  };
  std::vector<VarId> keys;
  for (const auto& [v, x] : a) keys.push_back(v);
  for (const auto& [v, x] : b) keys.push_back(v);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  for (const VarId& v : keys)
    rep.require(get(a, v) == get(b, v), what + "[" + var_str(prefix, v) + "]: " +
                                            get(a, v).str() + " vs " + get(b, v).str());
}

void compare_map2(CheckReport& rep, const std::string& what, const std::string& prefix,
                  const VarMap2& a, const VarMap2& b) {
  auto get = [](const VarMap2& m, const std::pair<VarId, VarId>& v) -> const Scalar& {
    auto it = m.find(v);
    return it == m.end() ? kZero : it->second;
  };
  std::vector<std::pair<VarId, VarId>> keys;
  for (const auto& [v, x] : a) keys.push_back(v);
  for (const auto& [v, x] : b) keys.push_back(v);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  for (const auto& v : keys)
    rep.require(get(a, v) == get(b, v), what + "[" + pair_str(prefix, v) + "]: " +
                                            get(a, v).str() + " vs " + get(b, v).str());
}

}  // namespace

std::string var_str(const std::string& prefix, const VarId& v) {
  return prefix + "_" + std::to_string(v.k) + "^" + std::to_string(v.a);
}

void add_sym2(VarMap2& q, const VarId& v, const VarId& w, const Scalar& c) {
  q[{v, w}] += c;
  q[{w, v}] += c;
}

VecSeries apply_D_power(const DOperator& d, const VecSeries& f, int power) {
  if (power < 0) throw std::domain_error("apply_D_power: negative power");
  VecSeries r = f;
  for (int i = 0; i < power; ++i) r = apply_D(d.A, d.space, r);
  return r;
}

void VirasoroNormalForm::truncate_vars(long kc) {
  trunc1(shift, kc);
  trunc2(q2quad, kc);
  trunc1(q2lin, kc);
  trunc1(lin, kc);
  trunc2(linear, kc);
  trunc2(dquad, kc);
  kmax = kc;
}

bool VirasoroNormalForm::is_zero_form() const {
  return q2quad.empty() && q2lin.empty() && q2const.is_zero() && const0.is_zero() &&
         lin.empty() && linear.empty() && dquad.empty();
}

VirasoroNormalForm& VirasoroNormalForm::scale(const Scalar& c) {
  for (auto& [v, x] : q2quad) x = c * x;
  for (auto& [v, x] : q2lin) x = c * x;
  q2const = c * q2const;
  const0 = c * const0;
  for (auto& [v, x] : lin) x = c * x;
  for (auto& [v, x] : linear) x = c * x;
  for (auto& [v, x] : dquad) x = c * x;
  prune2(q2quad);
  prune1(q2lin);
  prune1(lin);
  prune2(linear);
  prune2(dquad);
  return *this;
}

std::string VirasoroNormalForm::str() const {
  std::ostringstream os;
  os << label << " (vars " << var_prefix << ", dim " << dim << ", kmax " << kmax << ")\n";
  if (!q2quad.empty() || !q2lin.empty() || !q2const.is_zero()) {
    os << "  1/h^2 block:\n";
    for (const auto& [vw, x] : q2quad)
      os << "    1/2 [" << pair_str(var_prefix, vw) << "] " << x.str() << "\n";
    for (const auto& [v, x] : q2lin)
      os << "    [" << var_str(var_prefix, v) << "] " << x.str() << "\n";
    if (!q2const.is_zero()) os << "    const " << q2const.str() << "\n";
  }
  if (!const0.is_zero()) os << "  h^0 const: " << const0.str() << "\n";
  for (const auto& [vw, x] : linear)
    os << "  " << var_str(var_prefix, vw.first) << " d[" << var_str(var_prefix, vw.second)
       << "] " << x.str() << "\n";
  for (const auto& [v, x] : lin)
    os << "  d[" << var_str(var_prefix, v) << "] " << x.str() << "\n";
  for (const auto& [vw, x] : dquad)
    os << "  h^2/2 d[" << pair_str(var_prefix, vw) << "] " << x.str() << "\n";
  return os.str();
}

CheckReport compare_forms(const VirasoroNormalForm& a, const VirasoroNormalForm& b) {
  CheckReport rep;
  rep.require(a.dim == b.dim, "variable alphabets differ: dim " + std::to_string(a.dim) +
                                  " vs " + std::to_string(b.dim));
  if (!rep.ok()) return rep;
  VirasoroNormalForm x = a, y = b;
  long kc = std::min(a.kmax, b.kmax);
  x.truncate_vars(kc);
  y.truncate_vars(kc);
  const std::string& pfx = a.var_prefix;
  compare_map2(rep, "q2quad", pfx, x.q2quad, y.q2quad);
  compare_map1(rep, "q2lin", pfx, x.q2lin, y.q2lin);
  rep.require(x.q2const == y.q2const,
              "q2const: " + x.q2const.str() + " vs " + y.q2const.str());
  rep.require(x.const0 == y.const0, "const0: " + x.const0.str() + " vs " + y.const0.str());
  compare_map1(rep, "lin", pfx, x.lin, y.lin);
  compare_map2(rep, "linear", pfx, x.linear, y.linear);
  compare_map2(rep, "dquad", pfx, x.dquad, y.dquad);
  return rep;
}

VirasoroNormalForm commutator(const VirasoroNormalForm& a, const VirasoroNormalForm& b) {
  if (a.dim != b.dim || a.var_prefix != b.var_prefix)
    throw std::domain_error("commutator: incompatible variable alphabets");
  long kc = std::min(a.kmax, b.kmax) - std::max(a.reach, b.reach);
  if (kc < 0)
    throw std::domain_error(
        "commutator: truncation too small to close the bracket; need kmax >= " +
        std::to_string(std::max(a.reach, b.reach)));

  const VarMap2 dt = m2_transpose(a.linear), dpt = m2_transpose(b.linear);
  VirasoroNormalForm r;
  r.label = "[" + a.label + "," + b.label + "]";
  r.var_prefix = a.var_prefix;
  r.dim = a.dim;
  r.reach = a.reach + b.reach;

  // Quadratic 1/h^2 block: D A' + A' D^T - D' A - A D'^T.
  r.q2quad = m2_mul(a.linear, b.q2quad);
  m2_axpy(r.q2quad, m2_mul(b.q2quad, dt), Scalar(1));
  m2_axpy(r.q2quad, m2_mul(b.linear, a.q2quad), Scalar(-1));
  m2_axpy(r.q2quad, m2_mul(a.q2quad, dpt), Scalar(-1));
  prune2(r.q2quad);

  // Linear 1/h^2 block: D a' + A' l - D' a - A l'.
  r.q2lin = m2_vec(a.linear, b.q2lin);
  v_axpy(r.q2lin, m2_vec(b.q2quad, a.lin), Scalar(1));
  v_axpy(r.q2lin, m2_vec(b.linear, a.q2lin), Scalar(-1));
  v_axpy(r.q2lin, m2_vec(a.q2quad, b.lin), Scalar(-1));
  prune1(r.q2lin);

  // Constant 1/h^2 block: l^T a' - l'^T a.
  r.q2const = v_dot(a.lin, b.q2lin) - v_dot(b.lin, a.q2lin);

  // Central h^0 block: 1/2 (tr(Q A') - tr(Q' A)).
  r.const0 = Scalar(GaussianRational(1, 2)) *
             (m2_trace_mul(a.dquad, b.q2quad) - m2_trace_mul(b.dquad, a.q2quad));

  // t d block: D D' - D' D + A' Q - A Q'.
  r.linear = m2_mul(a.linear, b.linear);
  m2_axpy(r.linear, m2_mul(b.linear, a.linear), Scalar(-1));
  m2_axpy(r.linear, m2_mul(b.q2quad, a.dquad), Scalar(1));
  m2_axpy(r.linear, m2_mul(a.q2quad, b.dquad), Scalar(-1));
  prune2(r.linear);

  // Pure-derivative block: D'^T l - D^T l' + Q a' - Q' a.
  r.lin = m2_t_vec(b.linear, a.lin);
  v_axpy(r.lin, m2_t_vec(a.linear, b.lin), Scalar(-1));
  v_axpy(r.lin, m2_vec(a.dquad, b.q2lin), Scalar(1));
  v_axpy(r.lin, m2_vec(b.dquad, a.q2lin), Scalar(-1));
  prune1(r.lin);

  // h^2/2 block: Q D' + D'^T Q - Q' D - D^T Q'.
  r.dquad = m2_mul(a.dquad, b.linear);
  m2_axpy(r.dquad, m2_mul(dpt, a.dquad), Scalar(1));
  m2_axpy(r.dquad, m2_mul(b.dquad, a.linear), Scalar(-1));
  m2_axpy(r.dquad, m2_mul(dt, b.dquad), Scalar(-1));
  prune2(r.dquad);

  r.truncate_vars(kc);
  return r;
}

VirasoroNormalForm build_descendent_L(const FrobeniusPoint& f, const Calibration& c,
                                      long m, long kmax, bool with_center) {
  if (m < -1) throw std::domain_error("build_descendent_L: m must be >= -1");
  const int dim = f.space.dim;

  // Dilaton shift: tau_0 at k = 0, the polynomial u at k >= 1.
  VarMap1 sigma;
  for (int a = 0; a < dim; ++a)
    if (!c.shift_tau0[static_cast<size_t>(a)].is_zero())
      sigma[VarId{0, a}] = c.shift_tau0[static_cast<size_t>(a)];
  const VecSeries& u = c.shift_u;
  for (int j = std::max(0, u.lo()); j <= u.hi() && j + 1 <= kmax; ++j)
    for (int a = 0; a < dim; ++a)
      if (!u.at(j)[static_cast<size_t>(a)].is_zero())
        sigma[VarId{j + 1, a}] = u.at(j)[static_cast<size_t>(a)];

  // h^0 constant: -delta_{m,0} 1/4 str(mu^2 - 1/4); the state space carries
  // no odd part, so the supertrace is the trace.
  Scalar const0;
  if (m == 0) {
    StateEnd mu = f.space.mu_end();
    Scalar tr = (mu * mu).trace() - Scalar(GaussianRational(dim, 4));
    const0 = Scalar(GaussianRational(-1, 4)) * tr;
  }

  DOperator d{f.rho, f.space};
  VirasoroNormalForm L = build_from_d(d, m, kmax, sigma, const0, "t",
                                      "L_" + std::to_string(m));
  if (with_center) {
    VirasoroIndex idx = virasoro_index(c, f);
    if (m == 2 * idx.m_nu) L.q2const += idx.c_nu;
  }
  return L;
}

VirasoroNormalForm build_ancestor_L(const FrobeniusPoint& f, const VecSeries& vacuum,
                                    long m, long kmax) {
  if (m < -1) throw std::domain_error("build_ancestor_L: m must be >= -1");
  const int dim = f.space.dim;
  for (long j = 0; j + 1 <= kmax; ++j)
    if (!vacuum.known(static_cast<int>(j)))
      throw std::domain_error("build_ancestor_L: vacuum series unknown at order " +
                              std::to_string(j) + "; need [0," + std::to_string(kmax - 1) +
                              "]");

  // Dilaton shift s(z) - z v(z): sigma_{k,a} = v_{k-1}^a for k >= 1.
  VarMap1 sigma;
  for (long k = 1; k <= kmax; ++k)
    for (int a = 0; a < dim; ++a) {
      const Scalar& x = vacuum.at(static_cast<int>(k - 1))[static_cast<size_t>(a)];
      if (!x.is_zero()) sigma[VarId{k, a}] = x;
    }

  // h^0 constant: -1/4 sum_{i+j=m} tr(E^i (mu+1/2) E^j (mu-1/2)).
  StateEnd e = f.euler_mul();
  StateEnd mu = f.space.mu_end();
  StateEnd id = StateEnd::identity(static_cast<size_t>(dim));
  const Scalar half(GaussianRational(1, 2));
  StateEnd mup = mu + half * id, mum = mu - half * id;
  Scalar const0;
  for (long i = 0; i + 0 <= m; ++i) {
    long j = m - i;
    const0 -= Scalar(GaussianRational(1, 4)) *
              (e.pow(static_cast<unsigned>(i)) * mup * e.pow(static_cast<unsigned>(j)) * mum)
                  .trace();
  }

  DOperator d{e, f.space};
  return build_from_d(d, m, kmax, sigma, const0, "s", "Ltau_" + std::to_string(m));
}

VirasoroNormalForm build_gdd_L(long m, long kmax) {
  if (m < 0) throw std::domain_error("build_gdd_L: m must be >= 0");
  VirasoroNormalForm L;
  L.label = "Lgdd_" + std::to_string(m);
  L.var_prefix = "p";
  L.dim = 1;
  L.kmax = kmax;
  L.reach = m;

  const Scalar pu = ParamScalar::parameter("u");
  const Scalar pv = ParamScalar::parameter("v");
  if (m == 0) L.q2const = pu * pv;
  L.shift[VarId{1, 0}] = Scalar(1);
  for (long k = 1; k + m <= kmax; ++k)
    L.linear[{VarId{k, 0}, VarId{k + m, 0}}] = Scalar(GaussianRational(k + m));
  if (m + 1 <= kmax) L.lin[VarId{m + 1, 0}] -= Scalar(GaussianRational(m + 1));
  if (m >= 1 && m <= kmax)
    L.lin[VarId{m, 0}] += (pu + pv) * Scalar(GaussianRational(m));
  for (long k = 1; k <= m - 1; ++k)
    add_sym2(L.dquad, VarId{k, 0}, VarId{m - k, 0}, Scalar(GaussianRational(k * (m - k))));
  return L;
}

VirasoroNormalForm restrict_and_rename(
    const VirasoroNormalForm& a, const std::map<VarId, VarSubst>& var_map,
    const std::map<VarId, Scalar>& freeze, const std::string& new_prefix, int new_dim,
    long new_kmax, const std::function<Scalar(const Scalar&)>& scalar_map) {
  std::vector<std::string> errors;
  auto subst_of = [&](const VarId& v) -> const VarSubst* {
    auto it = var_map.find(v);
    return it == var_map.end() ? nullptr : &it->second;
  };
  auto frozen_of = [&](const VarId& v) -> const Scalar* {
    auto it = freeze.find(v);
    return it == freeze.end() ? nullptr : &it->second;
  };
  auto classify = [&](const VarId& v, const char* where) {
    if (!subst_of(v) && !frozen_of(v))
      errors.push_back(std::string(where) + ": variable " + var_str(a.var_prefix, v) +
                       " neither mapped nor frozen");
  };

  VirasoroNormalForm r;
  r.label = a.label + "|restricted";
  r.var_prefix = new_prefix;
  r.dim = new_dim;
  r.kmax = new_kmax;
  r.q2const = a.q2const;
  r.const0 = a.const0;

  const Scalar half(GaussianRational(1, 2));
  for (const auto& [vw, x] : a.q2quad) {
    classify(vw.first, "q2quad");
    classify(vw.second, "q2quad");
    const VarSubst *sv = subst_of(vw.first), *sw = subst_of(vw.second);
    const Scalar *fv = frozen_of(vw.first), *fw = frozen_of(vw.second);
    if (sv && sw)
      r.q2quad[{sv->to, sw->to}] += sv->factor * sw->factor * x;
    else if (sv && fw)
      r.q2lin[sv->to] += half * sv->factor * (*fw) * x;
    else if (fv && sw)
      r.q2lin[sw->to] += half * (*fv) * sw->factor * x;
    else if (fv && fw)
      r.q2const += half * (*fv) * (*fw) * x;
  }
  for (const auto& [v, x] : a.q2lin) {
    classify(v, "q2lin");
    if (const VarSubst* s = subst_of(v))
      r.q2lin[s->to] += s->factor * x;
    else if (const Scalar* f = frozen_of(v))
      r.q2const += (*f) * x;
  }
  for (const auto& [vw, x] : a.linear) {
    classify(vw.first, "linear");
    classify(vw.second, "linear");
    const VarSubst *sv = subst_of(vw.first), *sw = subst_of(vw.second);
    const Scalar* fv = frozen_of(vw.first);
    if (sw) {
      Scalar inv = sw->factor.inverse();
      if (sv)
        r.linear[{sv->to, sw->to}] += sv->factor * inv * x;
      else if (fv && !fv->is_zero())
        r.lin[sw->to] += (*fv) * inv * x;
    } else if (frozen_of(vw.second)) {
      // Derivative in a frozen direction: the coefficient must die.
      bool dies = (fv != nullptr) ? (fv->is_zero() || x.is_zero()) : x.is_zero();
      if (!dies)
        errors.push_back("derivative in frozen direction " +
                         var_str(a.var_prefix, vw.second) + " survives with coefficient (" +
                         x.str() + ") " + var_str(a.var_prefix, vw.first));
    }
  }
  for (const auto& [v, x] : a.lin) {
    classify(v, "lin");
    if (const VarSubst* s = subst_of(v))
      r.lin[s->to] += s->factor.inverse() * x;
    else if (frozen_of(v) && !x.is_zero())
      errors.push_back("derivative in frozen direction " + var_str(a.var_prefix, v) +
                       " survives with coefficient " + x.str());
  }
  for (const auto& [vw, x] : a.dquad) {
    classify(vw.first, "dquad");
    classify(vw.second, "dquad");
    const VarSubst *sv = subst_of(vw.first), *sw = subst_of(vw.second);
    if (sv && sw)
      r.dquad[{sv->to, sw->to}] += sv->factor.inverse() * sw->factor.inverse() * x;
    else if (!x.is_zero())
      errors.push_back("second derivative in frozen direction [" +
                       pair_str(a.var_prefix, vw) + "] survives with coefficient " +
                       x.str());
  }
  for (const auto& [v, x] : a.shift) {
    if (const VarSubst* s = subst_of(v)) {
      Scalar nx = s->factor.inverse() * x;
      if (!nx.is_zero()) r.shift[s->to] = nx;
    }
  }
  if (!errors.empty()) {
    std::string msg = "restrict_and_rename rejected:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::domain_error(msg);
  }

  if (scalar_map) {
    for (auto& [v, x] : r.q2quad) x = scalar_map(x);
    for (auto& [v, x] : r.q2lin) x = scalar_map(x);
    r.q2const = scalar_map(r.q2const);
    r.const0 = scalar_map(r.const0);
    for (auto& [v, x] : r.lin) x = scalar_map(x);
    for (auto& [v, x] : r.linear) x = scalar_map(x);
    for (auto& [v, x] : r.dquad) x = scalar_map(x);
    for (auto& [v, x] : r.shift) x = scalar_map(x);
  }
  prune2(r.q2quad);
  prune1(r.q2lin);
  prune1(r.lin);
  prune2(r.linear);
  prune2(r.dquad);
  r.truncate_vars(new_kmax);
  long reach = 0;
  for (const auto& [vw, x] : r.linear)
    reach = std::max(reach, vw.second.k - vw.first.k);
  r.reach = reach;
  return r;
}

VirasoroNormalForm restrict_egdd_to_gdd(const VirasoroNormalForm& l, long new_kmax) {
  std::map<VarId, VarSubst> var_map;
  std::map<VarId, Scalar> freeze;
  for (long k = 0; k <= l.kmax; ++k) {
    var_map[VarId{k, 0}] =
        VarSubst{VarId{k + 1, 0}, Scalar(GaussianRational(factorial(static_cast<unsigned>(k))))};
    freeze[VarId{k, 1}] = Scalar(0);
  }
  const int s1 = ParamRegistry::param_id("s1");
  const int s2 = ParamRegistry::param_id("s2");
  const int pu = ParamRegistry::param_id("u");
  const int pv = ParamRegistry::param_id("v");
  auto rename = [&](const Scalar& x) -> Scalar {
    if (!x.denominator().empty())
      throw std::domain_error("restrict_egdd_to_gdd: coefficient has denominator factors: " +
                              x.str());
    Scalar out;
    for (const auto& [mono, coeff] : x.terms()) {
      Monomial target;
      for (const auto& [id, exp] : mono) {
        if ((id != s1 && id != s2) || exp < 0 || exp % 2 != 0)
          throw std::domain_error("restrict_egdd_to_gdd: coefficient not an even polynomial "
                                  "in s1, s2: " +
                                  x.str());
        target.emplace_back(id == s1 ? pu : pv, exp / 2);
      }
      std::sort(target.begin(), target.end());
      out += ParamScalar::monomial(target, coeff);
    }
    return out;
  };
  VirasoroNormalForm r =
      restrict_and_rename(l, var_map, freeze, "p", 1, new_kmax, rename);
  r.label = l.label + "|gdd";
  return r;
}

CheckReport commutation_check(const std::function<VirasoroNormalForm(long)>& family,
                              long m_lo, long m_hi) {
  CheckReport rep;
  std::map<long, VirasoroNormalForm> built;
  auto get = [&](long m) -> const VirasoroNormalForm& {
    auto it = built.find(m);
    if (it == built.end()) it = built.emplace(m, family(m)).first;
    return it->second;
  };
  for (long m = m_lo; m <= m_hi; ++m)
    for (long n = m_lo; n <= m; ++n) {
      if (m + n < m_lo) continue;
      VirasoroNormalForm lhs = commutator(get(m), get(n));
      VirasoroNormalForm rhs;
      if (m == n) {
        rhs = lhs;
        rhs.scale(Scalar(0));
      } else {
        rhs = get(m + n);
        rhs.scale(Scalar(GaussianRational(m - n)));
      }
      CheckReport sub = compare_forms(lhs, rhs);
      std::string tag = "[L_" + std::to_string(m) + ",L_" + std::to_string(n) +
                        "] vs " + std::to_string(m - n) + "*L_" + std::to_string(m + n);
      rep.require(sub.ok(), tag + ": " + sub.str());
      if (!sub.ok()) return rep;
    }
  return rep;
}

}  // namespace vcf
