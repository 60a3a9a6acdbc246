#include "vcf/reconstruction.hpp"

#include <algorithm>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

namespace vcf {

namespace {

/// Square root of a scalar whose canonical form is a single Laurent term
/// times declared denominator factors, all with even exponents, and whose
/// coefficient is a rational square up to sign (a negative coefficient picks
/// up the principal imaginary unit).  Throws std::domain_error otherwise.
Scalar scalar_sqrt(const Scalar& s, const std::string& what) {
  if (s.is_zero()) return Scalar(0);
  if (s.terms().size() != 1)
    throw std::domain_error(what + ": square root of a non-monomial value " + s.str());
  const auto& [mono, coeff] = *s.terms().begin();
  Monomial half;
  for (const auto& [id, e] : mono) {
    if (e % 2 != 0)
      throw std::domain_error(what + ": square root of an odd parameter power in " + s.str());
    half.emplace_back(id, e / 2);
  }
  if (coeff.im() != 0)
    throw std::domain_error(what + ": square root of a non-real coefficient in " + s.str());
  mpq_class q = coeff.re();
  const bool negative = q < 0;
  if (negative) q = -q;
  mpz_class num = q.get_num(), den = q.get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t()))
    throw std::domain_error(what + ": coefficient of " + s.str() + " is not a rational square");
  mpz_class rnum, rden;
  mpz_sqrt(rnum.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(rden.get_mpz_t(), den.get_mpz_t());
  const mpq_class root(rnum, rden);  // num/den coprime, so already canonical
  const GaussianRational rc =
      negative ? GaussianRational(mpq_class(0), root) : GaussianRational(root);
  Scalar out = Scalar::monomial(half, rc);
  Scalar den_poly(1);
  bool have_den = false;
  for (const auto& [fid, p] : s.denominator()) {
    if (p % 2 != 0)
      throw std::domain_error(what + ": square root of an odd factor power in " + s.str());
    const auto& f = ParamRegistry::factor(fid);
    const Scalar lin = Scalar::parameter(ParamRegistry::param_name(f.xi)) -
                       f.lambda * Scalar::parameter(ParamRegistry::param_name(f.xj));
    for (unsigned i = 0; i < p / 2; ++i) den_poly *= lin;
    have_den = true;
  }
  if (have_den) out = out * den_poly.inverse();
  return out;
}

}  // namespace

StateEnd CanonicalFrame::to_normalized(const StateEnd& flat_op) const {
  StateEnd b = to_frame * flat_op * from_frame;
  if (dim == 2) {
    const Scalar r = sq_delta_prod.inverse();
    b.at(0, 1) = b.at(0, 1) * delta[1] * r;
    b.at(1, 0) = b.at(1, 0) * delta[0] * r;
  }
  return b;
}

StateEnd CanonicalFrame::normalized_to_idem(const StateEnd& nf_op) const {
  StateEnd b = nf_op;
  if (dim == 2) {
    const Scalar r = sq_delta_prod.inverse();
    b.at(0, 1) = b.at(0, 1) * delta[0] * r;
    b.at(1, 0) = b.at(1, 0) * delta[1] * r;
  }
  return b;
}

CanonicalFrame canonical_frame(const FrobeniusPoint& F) {
  const int n = F.space.dim;
  if (n < 1 || n > 2)
    throw std::domain_error("canonical frame: only dimensions 1 and 2 are supported");
  CanonicalFrame out;
  out.dim = n;
  const StateEnd em = F.euler_mul();
  if (n == 1) {
    out.idem = {F.unit};
    out.u = {em.at(0, 0)};
  } else {
    const Scalar tr = em.at(0, 0) + em.at(1, 1);
    const Scalar disc = tr * tr - Scalar(4) * em.det();
    if (disc.is_zero())
      throw std::domain_error("canonical frame: double Euler eigenvalue (multiplication not semisimple)");
    const Scalar sq = scalar_sqrt(disc, "canonical frame: Euler discriminant");
    const Scalar half(mpq_class(1, 2));
    out.u = {half * (tr + sq), half * (tr - sq)};
    for (const Scalar& u : out.u) {
      StateVec x(2);
      if (!em.at(0, 1).is_zero()) {
        x[0] = em.at(0, 1);
        x[1] = u - em.at(0, 0);
      } else if (!em.at(1, 0).is_zero()) {
        x[0] = u - em.at(1, 1);
        x[1] = em.at(1, 0);
      } else {
        x[(u == em.at(0, 0)) ? 0 : 1] = Scalar(1);
      }
      // Scale the eigenvector to the idempotent: x*x = c x with c invertible.
      const StateVec y = quantum_mul(x, x, F);
      Scalar c;
      bool found = false;
      for (size_t j = 0; j < 2 && !found; ++j) {
        if (x[j].is_zero()) continue;
        try {
          c = y[j] * x[j].inverse();
          found = true;
        } catch (const std::domain_error&) {
        }
      }
      if (!found || c.is_zero())
        throw std::domain_error("canonical frame: eigenvector cannot be scaled to an idempotent");
      if (!(y == c * x))
        throw std::domain_error("canonical frame: Euler eigenvector does not span an idempotent line");
      out.idem.push_back(c.inverse() * x);
    }
  }
  StateVec sum(static_cast<size_t>(n));
  for (const StateVec& e : out.idem) sum += e;
  if (!(sum == F.unit))
    throw std::domain_error("canonical frame: idempotents do not sum to the unit");
  for (int a = 0; a < n; ++a) {
    if (!(quantum_mul(out.idem[a], out.idem[a], F) == out.idem[a]))
      throw std::domain_error("canonical frame: idempotency check failed");
    if (!(em.apply(out.idem[a]) == out.u[a] * out.idem[a]))
      throw std::domain_error("canonical frame: Euler eigenvalue check failed");
  }
  if (n == 2 && !F.space.eta.eval(out.idem[0], out.idem[1]).is_zero())
    throw std::domain_error("canonical frame: idempotents are not orthogonal");
  for (int a = 0; a < n; ++a) {
    Scalar h = F.space.eta.eval(out.idem[a], out.idem[a]);
    if (h.is_zero())
      throw std::domain_error("canonical frame: idempotent with vanishing square norm");
    out.delta.push_back(h.inverse());
    out.delta_inv.push_back(std::move(h));
  }
  out.sq_delta_prod =
      (n == 1) ? Scalar(1)
               : out.delta[0] * out.delta[1] *
                     scalar_sqrt(out.delta_inv[0] * out.delta_inv[1], "frame normalization");
  StateEnd ff(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) ff.at(i, a) = out.idem[a][i];
  out.from_frame = ff;
  out.to_frame = ff.inverse();
  return out;
}

EndSeries solve_R(const FrobeniusPoint& F, const CanonicalFrame& frame, int order) {
  const int n = frame.dim;
  if (order < 0) throw std::domain_error("solve_R: negative order");
  const StateEnd mu = frame.to_normalized(F.space.mu_end());
  for (int a = 0; a < n; ++a)
    if (!mu.at(a, a).is_zero())
      throw std::domain_error("solve_R: grading operator has a diagonal part in the normalized frame");
  // Inverted eigenvalue gaps u_b - u_a for the off-diagonal division.
  StateEnd gap_inv(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const Scalar gap = frame.u[b] - frame.u[a];
      if (gap.is_zero())
        throw std::domain_error("solve_R: Euler eigenvalue collision");
      gap_inv.at(a, b) = gap.inverse();
    }
  EndSeries r(StateEnd(static_cast<size_t>(n)), 0, order, true, false);
  r.ref(0) = StateEnd::identity(static_cast<size_t>(n));
  for (int m = 0; m < order; ++m) {
    const StateEnd num = Scalar(m) * r.at(m) + mu * r.at(m);  // (m + mu) R_m
    for (int a = 0; a < n; ++a)
      if (!num.at(a, a).is_zero())
        throw std::domain_error("solve_R: consistency condition failed at level " + std::to_string(m));
    StateEnd next(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        next.at(a, b) = num.at(a, b) * gap_inv.at(a, b);
      }
    const Scalar lead_inv(mpq_class(1, m + 1));
    for (int a = 0; a < n; ++a) {
      Scalar acc(0);
      for (int c = 0; c < n; ++c) {
        if (c == a) continue;
        acc += mu.at(a, c) * next.at(c, a);
      }
      next.at(a, a) = -(lead_inv * acc);
    }
    r.ref(m + 1) = next;
  }
  return r;
}

CheckReport r_symplectic_check(const EndSeries& rbar) {
  CheckReport rep;
  const int n = static_cast<int>(rbar.zero_element().dim());
  for (int m = 0; m <= rbar.hi(); ++m) {
    StateEnd acc(static_cast<size_t>(n));
    for (int a = 0; a <= m; ++a) {
      StateEnd term = rbar.at(a).transpose() * rbar.at(m - a);
      if (a % 2) term = -term;
      acc += term;
    }
    const StateEnd expect =
        (m == 0) ? StateEnd::identity(static_cast<size_t>(n)) : StateEnd(static_cast<size_t>(n));
    rep.require(acc == expect, "symplectic identity fails at order " + std::to_string(m));
  }
  return rep;
}

VecSeries t_vector(const CanonicalFrame& frame, const EndSeries& rbar,
                   const VecSeries& vacuum_flat, int order) {
  const int n = frame.dim;
  if (order < 1) throw std::domain_error("t_vector: order must be at least 1");
  EndSeries re(StateEnd(static_cast<size_t>(n)), 0, order, true, false);
  for (int m = 0; m <= order; ++m) re.ref(m) = frame.normalized_to_idem(rbar.at(m));
  const EndSeries inv = series_invert(re, order);
  VecSeries ve(StateVec(static_cast<size_t>(n)), 0, order - 1, true, false);
  for (int k = 0; k < order; ++k) ve.ref(k) = frame.frame_components(vacuum_flat.at(k));
  const VecSeries w = series_apply(inv, ve, 0, order - 1);
  StateVec ones(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) ones[a] = Scalar(1);
  if (!(ones - w.at(0)).is_zero())
    throw std::domain_error("t_vector: leading vacuum coefficient is not the unit");
  VecSeries t(StateVec(static_cast<size_t>(n)), 1, order, true, false);
  for (int k = 2; k <= order; ++k) t.ref(k) = -w.at(k - 1);
  return t;
}

std::vector<std::vector<StateEnd>> edge_table(const EndSeries& rbar, int kmax) {
  if (kmax < 0) return {};
  const size_t n = rbar.zero_element().dim();
  std::vector<std::vector<StateEnd>> grid(static_cast<size_t>(kmax) + 1,
                                          std::vector<StateEnd>(static_cast<size_t>(kmax) + 1));
  const auto nmat = [&](int a, int b) {
    // Coefficient of z^a w^b in I - R^T(-z) R(-w).
    StateEnd m = rbar.at(a).transpose() * rbar.at(b);
    StateEnd out = ((a + b) % 2) ? std::move(m) : -m;
    if (a == 0 && b == 0) out += StateEnd::identity(n);
    return out;
  };
  for (int d = 0; d <= kmax; ++d)
    for (int k = d; k >= 0; --k) {
      const int l = d - k;
      StateEnd v = nmat(k + 1, l);
      if (l >= 1) v -= grid[static_cast<size_t>(k) + 1][static_cast<size_t>(l) - 1];
      grid[static_cast<size_t>(k)][static_cast<size_t>(l)] = std::move(v);
    }
  return grid;
}

namespace {

long factorial_long(int m) {
  long f = 1;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

std::vector<StableGraph> build_graphs(int g, int n) {
  if (2 * g - 2 + n <= 0)
    throw std::domain_error("stable graphs require 2g-2+n > 0");
  std::vector<StableGraph> out;
  const int vmax = 2 * g - 2 + n;
  for (int V = 1; V <= vmax; ++V) {
    std::vector<std::pair<int, int>> slots;  // (u, v) with u <= v
    for (int u = 0; u < V; ++u)
      for (int v = u; v < V; ++v) slots.emplace_back(u, v);
    for (int b1 = 0; b1 <= g; ++b1) {
      const int E = V - 1 + b1;
      const int gsum = g - b1;
      std::vector<int> gv(static_cast<size_t>(V), 0);
      std::vector<int> ev(slots.size(), 0);
      std::vector<int> lv(static_cast<size_t>(n), 0);
      std::vector<std::vector<int>> mat(static_cast<size_t>(V),
                                        std::vector<int>(static_cast<size_t>(V), 0));

      const auto emit_candidates = [&]() {
        // Adjacency matrix and connectivity.
        for (auto& row : mat) std::fill(row.begin(), row.end(), 0);
        for (size_t s = 0; s < slots.size(); ++s) {
          mat[static_cast<size_t>(slots[s].first)][static_cast<size_t>(slots[s].second)] += ev[s];
          if (slots[s].first != slots[s].second)
            mat[static_cast<size_t>(slots[s].second)][static_cast<size_t>(slots[s].first)] += ev[s];
        }
        std::vector<int> comp(static_cast<size_t>(V));
        std::iota(comp.begin(), comp.end(), 0);
        const std::function<int(int)> find = [&](int x) {
          while (comp[static_cast<size_t>(x)] != x) x = comp[static_cast<size_t>(x)];
          return x;
        };
        for (size_t s = 0; s < slots.size(); ++s)
          if (ev[s] > 0) comp[static_cast<size_t>(find(slots[s].first))] = find(slots[s].second);
        for (int v = 0; v < V; ++v)
          if (find(v) != find(0)) return;  // disconnected

        // Leg assignments.
        std::fill(lv.begin(), lv.end(), 0);
        while (true) {
          bool stable = true;
          for (int v = 0; v < V && stable; ++v) {
            int flags = 0;
            for (int i = 0; i < n; ++i)
              if (lv[static_cast<size_t>(i)] == v) ++flags;
            for (int u = 0; u < V; ++u)
              flags += (u == v) ? 2 * mat[static_cast<size_t>(v)][static_cast<size_t>(v)]
                                : mat[static_cast<size_t>(v)][static_cast<size_t>(u)];
            if (2 * gv[static_cast<size_t>(v)] - 2 + flags <= 0) stable = false;
          }
          if (stable) {
            // Canonical-representative filter over vertex permutations.
            const auto key_for = [&](const std::vector<int>& perm) {
              std::string s;
              for (int i = 0; i < V; ++i) {
                const int v = perm[static_cast<size_t>(i)];
                s += 'g';
                s += std::to_string(gv[static_cast<size_t>(v)]);
                s += ':';
                for (int lbl = 0; lbl < n; ++lbl)
                  if (lv[static_cast<size_t>(lbl)] == v) {
                    s += std::to_string(lbl);
                    s += '.';
                  }
                s += '|';
              }
              for (int i = 0; i < V; ++i)
                for (int j = i; j < V; ++j) {
                  s += std::to_string(
                      mat[static_cast<size_t>(perm[static_cast<size_t>(i)])]
                         [static_cast<size_t>(perm[static_cast<size_t>(j)])]);
                  s += ',';
                }
              return s;
            };
            std::vector<int> perm(static_cast<size_t>(V));
            std::iota(perm.begin(), perm.end(), 0);
            const std::string id_key = key_for(perm);
            bool canonical = true;
            long aut_perm = 0;
            do {
              const std::string k = key_for(perm);
              if (k < id_key) {
                canonical = false;
                break;
              }
              if (k == id_key) ++aut_perm;
            } while (std::next_permutation(perm.begin(), perm.end()));
            if (canonical) {
              StableGraph sg;
              sg.vertices.resize(static_cast<size_t>(V));
              for (int v = 0; v < V; ++v) sg.vertices[static_cast<size_t>(v)].genus = gv[static_cast<size_t>(v)];
              for (int i = 0; i < n; ++i)
                sg.vertices[static_cast<size_t>(lv[static_cast<size_t>(i)])].legs.push_back(i);
              long aut = aut_perm;
              for (size_t s = 0; s < slots.size(); ++s) {
                for (int c = 0; c < ev[s]; ++c) sg.edges.emplace_back(slots[s]);
                if (slots[s].first == slots[s].second)
                  aut *= (1L << ev[s]) * factorial_long(ev[s]);
                else
                  aut *= factorial_long(ev[s]);
              }
              sg.aut = aut;
              out.push_back(std::move(sg));
            }
          }
          // Advance the leg odometer.
          size_t i = 0;
          while (i < lv.size() && ++lv[i] == V) lv[i++] = 0;
          if (i == lv.size()) break;
          if (n == 0) break;
        }
      };

      // Enumerate genus distributions, then edge multiplicities.
      const std::function<void(size_t, int)> genus_rec = [&](size_t idx, int left) {
        if (idx + 1 == gv.size()) {
          gv[idx] = left;
          // slots is nonempty for every V >= 1, so ev has at least one entry.
          const std::function<void(size_t, int)> edge_rec = [&](size_t s, int eleft) {
            if (s + 1 == ev.size()) {
              ev[s] = eleft;
              emit_candidates();
              return;
            }
            for (int c = 0; c <= eleft; ++c) {
              ev[s] = c;
              edge_rec(s + 1, eleft - c);
            }
          };
          edge_rec(0, E);
          return;
        }
        for (int c = 0; c <= left; ++c) {
          gv[idx] = c;
          genus_rec(idx + 1, left - c);
        }
      };
      genus_rec(0, gsum);
    }
  }
  return out;
}

}  // namespace

const std::vector<StableGraph>& enumerate_stable_graphs(int g, int n) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<std::vector<StableGraph>>> cache;
  const std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{g, n}];
  if (!slot) slot = std::make_unique<std::vector<StableGraph>>(build_graphs(g, n));
  return *slot;
}

namespace {

Scalar inv_factorial(long c) {
  return Scalar(mpq_class(1) / factorial(static_cast<unsigned>(c)));
}

struct VertexCtx {
  int genus = 0;
  std::vector<int> legs;
  std::vector<long> edge_pows;
  int base = 0;   // legs plus edge ends
  int mcap = 0;   // largest feasible number of shift insertions
  long bmax = 0;  // largest feasible single psi power
};

/// Graph-sum evaluator.  One instance per thread: the edge table grows
/// lazily and the insertion data is per-call state.
struct Engine {
  const FrobeniusPoint& F;
  const CanonicalFrame& fr;
  const EndSeries& rbar;
  const VecSeries& t_red;
  const CorrelatorStore& kw;
  int order;

  EndSeries re_star;
  std::vector<std::vector<StateEnd>> vtab;
  int vtab_kmax = -1;

  // Per-call state.
  std::vector<std::vector<StateVec>> dressed;  // dressed[i][j] = R*_j (frame comps of input i)
  std::vector<long> psi;

  Engine(const FrobeniusPoint& f, const CanonicalFrame& c, const EndSeries& r,
         const VecSeries& t, const CorrelatorStore& k)
      : F(f),
        fr(c),
        rbar(r),
        t_red(t),
        kw(k),
        order(r.hi()),
        re_star(StateEnd(static_cast<size_t>(c.dim)), 0, r.hi(), true, false) {
    if (kw.dim != 1 || kw.level_lo != 0)
      throw std::domain_error("reconstruction: vertex store must be one-variable with levels from 0");
    for (int m = 0; m <= order; ++m) {
      const StateEnd e = fr.normalized_to_idem(rbar.at(m)).transpose();
      StateEnd s(static_cast<size_t>(fr.dim));
      for (int i = 0; i < fr.dim; ++i)
        for (int j = 0; j < fr.dim; ++j)
          s.at(static_cast<size_t>(i), static_cast<size_t>(j)) =
              fr.delta[static_cast<size_t>(i)] *
              e.at(static_cast<size_t>(i), static_cast<size_t>(j)) *
              fr.delta_inv[static_cast<size_t>(j)];
      re_star.ref(m) = std::move(s);
    }
  }

  void ensure_table(int kmax) {
    if (kmax > vtab_kmax) {
      vtab = edge_table(rbar, kmax);
      vtab_kmax = kmax;
    }
  }

  Scalar correlator(int g, const std::vector<AncestorInsertion>& ins) {
    const int n = static_cast<int>(ins.size());
    if (g < 0) throw std::domain_error("reconstruction: negative genus");
    for (const auto& x : ins) {
      if (static_cast<int>(x.vec.dim()) != fr.dim)
        throw std::domain_error("reconstruction: insertion dimension mismatch");
      if (x.psi < 0) throw std::domain_error("reconstruction: negative psi power");
    }
    if (2 * g - 2 + n <= 0) return Scalar(0);
    const auto& graphs = enumerate_stable_graphs(g, n);
    dressed.assign(static_cast<size_t>(n), {});
    psi.assign(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      const StateVec xe = fr.frame_components(ins[static_cast<size_t>(i)].vec);
      auto& d = dressed[static_cast<size_t>(i)];
      d.reserve(static_cast<size_t>(order) + 1);
      for (int j = 0; j <= order; ++j) d.push_back(re_star.at(j).apply(xe));
      psi[static_cast<size_t>(i)] = ins[static_cast<size_t>(i)].psi;
    }
    Scalar total(0);
    for (const auto& G : graphs) total += graph_value(G);
    return total;
  }

  Scalar graph_value(const StableGraph& G) {
    const int V = static_cast<int>(G.vertices.size());
    std::vector<VertexCtx> vc(static_cast<size_t>(V));
    for (int v = 0; v < V; ++v) {
      vc[static_cast<size_t>(v)].genus = G.vertices[static_cast<size_t>(v)].genus;
      vc[static_cast<size_t>(v)].legs = G.vertices[static_cast<size_t>(v)].legs;
      vc[static_cast<size_t>(v)].base = static_cast<int>(vc[static_cast<size_t>(v)].legs.size());
    }
    for (const auto& [a, b] : G.edges) {
      ++vc[static_cast<size_t>(a)].base;
      ++vc[static_cast<size_t>(b)].base;
    }
    long need = 0;
    long pmax = 0;
    for (auto& v : vc) {
      v.mcap = std::max(0, 3 * v.genus - 3 + v.base);
      v.bmax = 3L * v.genus - 3 + v.base + v.mcap;
      pmax = std::max(pmax, v.bmax);
    }
    for (const auto& [a, b] : G.edges)
      need = std::max(need, (a == b) ? vc[static_cast<size_t>(a)].bmax
                                     : vc[static_cast<size_t>(a)].bmax +
                                           vc[static_cast<size_t>(b)].bmax);
    if (pmax > order || (!G.edges.empty() && need + 1 > order))
      throw std::domain_error("reconstruction: series order " + std::to_string(order) +
                              " too small for this correlator type (need at least " +
                              std::to_string(std::max(pmax, need + 1)) + ")");
    if (!G.edges.empty()) ensure_table(static_cast<int>(need));

    std::vector<int> alpha(static_cast<size_t>(V), 0);
    Scalar total(0);
    while (true) {
      Scalar pref(mpq_class(1) / mpq_class(static_cast<long>(G.aut)));
      for (int v = 0; v < V; ++v) {
        const int a = alpha[static_cast<size_t>(v)];
        const int gv = vc[static_cast<size_t>(v)].genus;
        if (gv == 0)
          pref *= fr.delta_inv[static_cast<size_t>(a)];
        else
          for (int i = 1; i < gv; ++i) pref *= fr.delta[static_cast<size_t>(a)];
      }
      for (const auto& [a, b] : G.edges)
        pref *= (alpha[static_cast<size_t>(a)] == alpha[static_cast<size_t>(b)])
                    ? fr.delta[static_cast<size_t>(alpha[static_cast<size_t>(a)])]
                    : fr.sq_delta_prod;
      Scalar av(0);
      edge_rec(G, vc, alpha, 0, Scalar(1), av);
      total += pref * av;
      size_t i = 0;
      while (i < alpha.size() && ++alpha[i] == fr.dim) alpha[i++] = 0;
      if (i == alpha.size()) break;
    }
    return total;
  }

  void edge_rec(const StableGraph& G, std::vector<VertexCtx>& vc, const std::vector<int>& alpha,
                size_t ei, Scalar coeff, Scalar& out) {
    if (ei == G.edges.size()) {
      Scalar prod = std::move(coeff);
      for (size_t v = 0; v < vc.size(); ++v) {
        const Scalar vs = vertex_sum(vc[v], alpha[v]);
        if (vs.is_zero()) return;
        prod *= vs;
      }
      out += prod;
      return;
    }
    const auto [a, b] = G.edges[ei];
    auto& ca = vc[static_cast<size_t>(a)];
    auto& cb = vc[static_cast<size_t>(b)];
    const long used_a = std::accumulate(ca.edge_pows.begin(), ca.edge_pows.end(), 0L);
    for (long k = 0; k <= ca.bmax - used_a; ++k) {
      ca.edge_pows.push_back(k);
      const long used_b = std::accumulate(cb.edge_pows.begin(), cb.edge_pows.end(), 0L);
      for (long l = 0; l <= cb.bmax - used_b; ++l) {
        if (k + l > vtab_kmax) break;
        const Scalar& w = vtab[static_cast<size_t>(k)][static_cast<size_t>(l)].at(
            static_cast<size_t>(alpha[static_cast<size_t>(a)]),
            static_cast<size_t>(alpha[static_cast<size_t>(b)]));
        if (w.is_zero()) continue;
        cb.edge_pows.push_back(l);
        edge_rec(G, vc, alpha, ei + 1, coeff * w, out);
        cb.edge_pows.pop_back();
      }
      ca.edge_pows.pop_back();
    }
  }

  Scalar vertex_sum(const VertexCtx& v, int axis) {
    const long esum = std::accumulate(v.edge_pows.begin(), v.edge_pows.end(), 0L);
    std::vector<long> levels(v.edge_pows.begin(), v.edge_pows.end());
    Scalar total(0);
    for (int m = 0; m <= v.mcap; ++m) {
      const long rem = 3L * v.genus - 3 + v.base + m - esum;
      if (rem < 2L * m) continue;
      leg_rec(v, axis, 0, m, rem, Scalar(1), levels, total);
    }
    return total;
  }

  void leg_rec(const VertexCtx& v, int axis, size_t li, int m, long rem, const Scalar& coeff,
               std::vector<long>& levels, Scalar& total) {
    if (li == v.legs.size()) {
      t_rec(v, axis, std::min<long>(rem, order), m, rem, coeff, levels, total);
      return;
    }
    const int in = v.legs[li];
    const long c = psi[static_cast<size_t>(in)];
    for (long p = c; p - c <= order && p <= rem - 2L * m; ++p) {
      const Scalar& comp = dressed[static_cast<size_t>(in)][static_cast<size_t>(p - c)]
                                  [static_cast<size_t>(axis)];
      if (comp.is_zero()) continue;
      Scalar c2 = coeff * comp;
      if ((p - c) % 2) c2 = -c2;
      levels.push_back(p);
      leg_rec(v, axis, li + 1, m, rem - p, c2, levels, total);
      levels.pop_back();
    }
  }

  void t_rec(const VertexCtx& v, int axis, long q, int m_left, long rem, const Scalar& coeff,
             std::vector<long>& levels, Scalar& total) {
    if (m_left == 0) {
      if (rem != 0) return;
      Insertions key;
      key.reserve(levels.size());
      for (long lev : levels) key.push_back(VarId{lev, 0});
      key = sorted_key(std::move(key));
      const Scalar* val = kw.find(v.genus, key);
      if (!val) throw MissingEntryError(v.genus, key, kw.var_prefix);
      total += coeff * (*val);
      return;
    }
    if (q < 2) return;
    const Scalar& tq = t_red.at(static_cast<int>(q))[static_cast<size_t>(axis)];
    const long cmax = std::min<long>(m_left, rem / q);
    Scalar qpow(1);
    for (long c = 0; c <= cmax; ++c) {
      if (rem - c * q >= 2L * (m_left - c)) {
        const Scalar c2 = coeff * qpow * inv_factorial(c);
        for (long i = 0; i < c; ++i) levels.push_back(q);
        t_rec(v, axis, q - 1, m_left - static_cast<int>(c), rem - c * q, c2, levels, total);
        for (long i = 0; i < c; ++i) levels.pop_back();
      }
      if (c == cmax || tq.is_zero()) break;
      qpow *= tq;
    }
  }
};

}  // namespace

Scalar ancestor_correlator(const FrobeniusPoint& F, const CanonicalFrame& frame,
                           const EndSeries& rbar, const VecSeries& t_red,
                           const CorrelatorStore& kw, int g,
                           const std::vector<AncestorInsertion>& insertions) {
  Engine eng(F, frame, rbar, t_red, kw);
  return eng.correlator(g, insertions);
}

Scalar descendent_correlator(const FrobeniusPoint& F, const Calibration& C,
                             const CanonicalFrame& frame, const EndSeries& rbar,
                             const VecSeries& t_red, const CorrelatorStore& kw, int g,
                             const std::vector<AncestorInsertion>& insertions) {
  const int n = static_cast<int>(insertions.size());
  if (2 * g - 2 + n <= 0)
    throw std::domain_error("descendent dressing requires a stable correlator type");
  Engine eng(F, frame, rbar, t_red, kw);
  std::vector<std::vector<AncestorInsertion>> choices(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto& x = insertions[static_cast<size_t>(j)];
    if (x.psi < 0) throw std::domain_error("reconstruction: negative psi power");
    for (long i = 0; i <= x.psi; ++i) {
      const StateEnd& si = C.s_matrix.at(static_cast<int>(-i));
      choices[static_cast<size_t>(j)].push_back({si.apply(x.vec), x.psi - i});
    }
  }
  std::vector<size_t> pick(static_cast<size_t>(n), 0);
  std::vector<AncestorInsertion> cur(static_cast<size_t>(n));
  Scalar acc(0);
  while (true) {
    for (int j = 0; j < n; ++j)
      cur[static_cast<size_t>(j)] = choices[static_cast<size_t>(j)][pick[static_cast<size_t>(j)]];
    acc += eng.correlator(g, cur);
    size_t i = 0;
    while (i < pick.size() && ++pick[i] == choices[i].size()) pick[i++] = 0;
    if (i == pick.size()) break;
    if (n == 0) break;
  }
  return acc;
}

ReconstructionData build_reconstruction(const Model& model, int order) {
  ReconstructionData rd;
  rd.frame = canonical_frame(model.F);
  rd.rbar = solve_R(model.F, rd.frame, order);
  rd.t_red = t_vector(rd.frame, rd.rbar, model.C.vacuum, order);
  rd.order = order;
  return rd;
}

namespace {

std::vector<std::pair<int, Insertions>> enumerate_store_keys(const CorrelatorStore& store) {
  std::vector<std::pair<int, Insertions>> keys;
  for (int g = 0; g <= store.max_genus; ++g) {
    const int cap = store.insertion_cap(g);
    const int nmin = (g == 0) ? 3 : 1;
    Insertions cur;
    const std::function<void(long, int, long)> rec = [&](long klo, int alo, long wt) {
      if (static_cast<int>(cur.size()) >= nmin) keys.emplace_back(g, cur);
      if (static_cast<int>(cur.size()) == cap) return;
      for (long k = klo; k <= store.max_weight - wt; ++k)
        for (int a = (k == klo) ? alo : 0; a < store.dim; ++a) {
          cur.push_back(VarId{k, a});
          rec(k, a, wt + k);
          cur.pop_back();
        }
    };
    rec(0, 0, 0);
  }
  return keys;
}

CorrelatorStore reconstruct_store_impl(const Model& model, const ReconstructionData& rd,
                                       const CorrelatorStore& kw, int max_genus, long max_weight,
                                       int max_insertions, bool descendent) {
  CorrelatorStore store;
  store.model = model.name;
  store.var_prefix = descendent ? "t" : "s";
  store.dim = model.F.space.dim;
  store.level_lo = 0;
  store.max_genus = max_genus;
  store.max_weight = max_weight;
  store.max_insertions = max_insertions;
  const auto keys = enumerate_store_keys(store);
  std::vector<Scalar> vals(keys.size());
  const unsigned nt =
      (keys.size() < 16) ? 1u : std::max(1u, std::min(std::thread::hardware_concurrency(), 8u));
  const auto worker = [&](unsigned t0) {
    Engine eng(model.F, rd.frame, rd.rbar, rd.t_red, kw);
    for (size_t i = t0; i < keys.size(); i += nt) {
      const auto& [g, key] = keys[i];
      std::vector<AncestorInsertion> ins;
      ins.reserve(key.size());
      for (const VarId& v : key) {
        StateVec b(static_cast<size_t>(store.dim));
        b[static_cast<size_t>(v.a)] = Scalar(1);
        ins.push_back({std::move(b), v.k});
      }
      if (descendent) {
        vals[i] = descendent_correlator(model.F, model.C, rd.frame, rd.rbar, rd.t_red, kw, g, ins);
      } else {
        vals[i] = eng.correlator(g, ins);
      }
    }
  };
  if (nt <= 1) {
    worker(0);
  } else {
    std::vector<std::future<void>> futs;
    futs.reserve(nt);
    for (unsigned t = 0; t < nt; ++t)
      futs.push_back(std::async(std::launch::async, worker, t));
    for (auto& f : futs) f.get();
  }
  for (size_t i = 0; i < keys.size(); ++i)
    store.set(keys[i].first, keys[i].second, std::move(vals[i]));
  return store;
}

}  // namespace

CorrelatorStore reconstruct_ancestor_store(const Model& model, const ReconstructionData& rd,
                                           const CorrelatorStore& kw, int max_genus,
                                           long max_weight, int max_insertions) {
  return reconstruct_store_impl(model, rd, kw, max_genus, max_weight, max_insertions, false);
}

CorrelatorStore reconstruct_descendent_store(const Model& model, const ReconstructionData& rd,
                                             const CorrelatorStore& kw, int max_genus,
                                             long max_weight, int max_insertions) {
  return reconstruct_store_impl(model, rd, kw, max_genus, max_weight, max_insertions, true);
}

}  // namespace vcf
