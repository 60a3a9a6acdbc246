#include "vcf/dessins.hpp"

#include <algorithm>
#include <future>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace vcf {

long DessinQuery::d() const {
  return std::accumulate(lambda.begin(), lambda.end(), 0L);
}

bool DessinQuery::genus(long& g_out) const {
  const long m = static_cast<long>(lambda.size());
  const long chi = d() - (k + l + m);  // 2g - 2
  if (chi % 2 != 0 || chi < -2) return false;
  g_out = (chi + 2) / 2;
  return true;
}

std::string DessinConvention::str() const {
  return multiplicity_factor ? "pairs * prod mult(lambda)! / d!" : "pairs / d!";
}

namespace {

std::vector<std::vector<long>> partitions_of(long d) {
  std::vector<std::vector<long>> out;
  std::vector<long> cur;
  const std::function<void(long, long)> rec = [&](long left, long maxp) {
    if (left == 0) {
      out.push_back(cur);
      return;
    }
    for (long p = std::min(left, maxp); p >= 1; --p) {
      cur.push_back(p);
      rec(left - p, p);
      cur.pop_back();
    }
  };
  rec(d, d);
  return out;
}

long long factorial_ll(long n) {
  long long f = 1;
  for (long i = 2; i <= n; ++i) f *= i;
  return f;
}

long long multiplicity_factorial(const std::vector<long>& lambda) {
  long long f = 1;
  long run = 1;
  for (size_t i = 1; i <= lambda.size(); ++i) {
    if (i < lambda.size() && lambda[i] == lambda[i - 1]) {
      ++run;
    } else {
      f *= factorial_ll(run);
      run = 1;
    }
  }
  return f;
}

long long class_size(long d, const std::vector<long>& type) {
  long long denom = multiplicity_factorial(type);
  for (long p : type) denom *= p;
  return factorial_ll(d) / denom;
}

std::vector<int> representative(long d, const std::vector<long>& type) {
  std::vector<int> s(static_cast<size_t>(d));
  int pos = 0;
  for (long p : type) {
    for (long i = 0; i < p; ++i)
      s[static_cast<size_t>(pos + i)] = pos + static_cast<int>((i + 1) % p);
    pos += static_cast<int>(p);
  }
  return s;
}

std::vector<long> cycle_type(const std::vector<int>& p) {
  std::vector<long> type;
  std::vector<bool> seen(p.size(), false);
  for (size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    long len = 0;
    for (size_t j = i; !seen[j]; j = static_cast<size_t>(p[j])) {
      seen[j] = true;
      ++len;
    }
    type.push_back(len);
  }
  std::sort(type.rbegin(), type.rend());
  return type;
}

int cycle_count(const std::vector<int>& p) {
  int n = 0;
  std::vector<bool> seen(p.size(), false);
  for (size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    ++n;
    for (size_t j = i; !seen[j]; j = static_cast<size_t>(p[j])) seen[j] = true;
  }
  return n;
}

bool transitive(const std::vector<int>& s, const std::vector<int>& a) {
  const size_t d = s.size();
  std::vector<size_t> root(d);
  std::iota(root.begin(), root.end(), 0);
  const std::function<size_t(size_t)> find = [&](size_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (size_t i = 0; i < d; ++i) {
    root[find(i)] = find(static_cast<size_t>(s[i]));
    root[find(i)] = find(static_cast<size_t>(a[i]));
  }
  for (size_t i = 0; i < d; ++i)
    if (find(i) != find(0)) return false;
  return true;
}

std::map<DessinClassKey, long long> sweep_class(long d, const std::vector<long>& sigma_type) {
  const std::vector<int> sigma = representative(d, sigma_type);
  const long long csize = class_size(d, sigma_type);
  const int k = static_cast<int>(sigma_type.size());
  std::map<DessinClassKey, long long> acc;
  std::vector<int> alpha(static_cast<size_t>(d));
  std::iota(alpha.begin(), alpha.end(), 0);
  std::vector<int> prod(static_cast<size_t>(d));
  do {
    if (!transitive(sigma, alpha)) continue;
    for (size_t i = 0; i < alpha.size(); ++i)
      prod[i] = sigma[static_cast<size_t>(alpha[i])];
    DessinClassKey key{k, cycle_count(alpha), cycle_type(prod)};
    acc[key] += csize;
  } while (std::next_permutation(alpha.begin(), alpha.end()));
  return acc;
}

std::map<DessinClassKey, long long> build_pair_table(int d) {
  if (d < 1 || d > 9)
    throw std::domain_error("dessin pair table: edge count must be in [1, 9]");
  const auto types = partitions_of(d);
  std::vector<std::future<std::map<DessinClassKey, long long>>> futs;
  futs.reserve(types.size());
  for (const auto& t : types)
    futs.push_back(std::async(std::launch::async, sweep_class, d, t));
  std::map<DessinClassKey, long long> total;
  for (auto& f : futs)
    for (const auto& [key, c] : f.get()) total[key] += c;
  return total;
}

}  // namespace

const std::map<DessinClassKey, long long>& dessin_pair_table(int d) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<std::map<DessinClassKey, long long>>> cache;
  const std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[d];
  if (!slot)
    slot = std::make_unique<std::map<DessinClassKey, long long>>(build_pair_table(d));
  return *slot;
}

long long transitive_pair_total(int d) {
  long long t = 0;
  for (const auto& [key, c] : dessin_pair_table(d)) t += c;
  return t;
}

Scalar count_dessins(const DessinQuery& q, const DessinConvention& conv, int max_d) {
  if (q.k < 1 || q.l < 1)
    throw std::domain_error("dessin query: vertex counts k, l must be at least 1");
  if (q.lambda.empty())
    throw std::domain_error("dessin query: at least one face is required");
  for (long p : q.lambda)
    if (p < 1) throw std::domain_error("dessin query: half-perimeters must be positive");
  const long d = q.d();
  if (d > max_d)
    throw std::domain_error("dessin query: edge count " + std::to_string(d) +
                            " exceeds the bound " + std::to_string(max_d));
  long g = 0;
  if (!q.genus(g)) return Scalar(0);
  std::vector<long> lam = q.lambda;
  std::sort(lam.rbegin(), lam.rend());
  const auto& table = dessin_pair_table(static_cast<int>(d));
  const auto it = table.find(DessinClassKey{q.k, q.l, lam});
  if (it == table.end()) return Scalar(0);
  mpq_class value(static_cast<long>(it->second));
  value /= mpq_class(static_cast<long>(factorial_ll(d)));
  if (conv.multiplicity_factor) value *= static_cast<long>(multiplicity_factorial(lam));
  return Scalar(value);
}

Scalar recursion_count(const CorrelatorStore& gdd_store, const DessinQuery& q) {
  long g = 0;
  if (!q.genus(g)) return Scalar(0);
  Insertions key;
  for (long p : q.lambda) key.push_back(VarId{p, 0});
  key = sorted_key(std::move(key));
  const Scalar* val = gdd_store.find(static_cast<int>(g), key);
  if (!val)
    throw std::domain_error("recursion count: store has no value for " +
                            key_str(gdd_store.var_prefix, static_cast<int>(g), key));
  if (!val->denominator().empty())
    throw std::domain_error("recursion count: stored value is not polynomial");
  const int uid = ParamRegistry::param_id("u");
  const int vid = ParamRegistry::param_id("v");
  GaussianRational coeff;
  for (const auto& [mono, c] : val->terms()) {
    long ju = 0, jv = 0;
    for (const auto& [id, e] : mono) {
      if (id == uid)
        ju = e;
      else if (id == vid)
        jv = e;
      else
        throw std::domain_error("recursion count: stored value involves a parameter "
                                "other than u, v");
    }
    if (ju == q.k && jv == q.l) coeff = c;
  }
  if (!coeff.is_real())
    throw std::domain_error("recursion count: coefficient is not rational");
  std::vector<long> lam = q.lambda;
  std::sort(lam.rbegin(), lam.rend());
  mpq_class value = coeff.re();
  value /= mpq_class(static_cast<long>(multiplicity_factorial(lam)));
  return Scalar(value);
}

namespace {

/// Every admissible query with edge count exactly d.
std::vector<DessinQuery> queries_for(long d) {
  std::vector<DessinQuery> out;
  for (const auto& lam : partitions_of(d)) {
    const long m = static_cast<long>(lam.size());
    for (long g = 0; 2 * g - 2 <= d - m - 2; ++g) {
      const long kl = d - m - (2 * g - 2);  // k + l on the admissible line
      for (long k = 1; k <= kl - 1; ++k)
        out.push_back(DessinQuery{static_cast<int>(k), static_cast<int>(kl - k), lam});
    }
  }
  return out;
}

}  // namespace

DessinConvention calibrate_convention(const CorrelatorStore& gdd_store, int recheck_d) {
  const DessinConvention cand[2] = {DessinConvention{false}, DessinConvention{true}};
  bool alive[2] = {true, true};
  std::ostringstream mismatches;
  for (long d = 1; d <= 3; ++d)
    for (const DessinQuery& q : queries_for(d)) {
      const Scalar want = recursion_count(gdd_store, q);
      for (int c = 0; c < 2; ++c) {
        if (!alive[c]) continue;
        const Scalar got = count_dessins(q, cand[c]);
        if (!(got == want)) {
          alive[c] = false;
          mismatches << "  candidate (" << cand[c].str() << ") fails at k=" << q.k
                     << " l=" << q.l << " lambda=(";
          for (size_t i = 0; i < q.lambda.size(); ++i)
            mismatches << (i ? "," : "") << q.lambda[i];
          mismatches << "): oracle " << got.str() << " vs recursion " << want.str() << "\n";
        }
      }
    }
  if (alive[0] == alive[1]) {
    throw std::domain_error(
        std::string("convention calibration: ") +
        (alive[0] ? "both candidates survive d <= 3 (underdetermined)"
                  : "no candidate matches the recursion at d <= 3") +
        "\n" + mismatches.str());
  }
  const DessinConvention winner = alive[0] ? cand[0] : cand[1];
  for (long d = 4; d <= recheck_d; ++d)
    for (const DessinQuery& q : queries_for(d)) {
      const Scalar want = recursion_count(gdd_store, q);
      const Scalar got = count_dessins(q, winner, recheck_d);
      if (!(got == want))
        throw std::domain_error("convention calibration: locked convention (" + winner.str() +
                                ") breaks at d = " + std::to_string(d) + ": oracle " +
                                got.str() + " vs recursion " + want.str());
    }
  return winner;
}

CheckReport dessins_cross_check(const CorrelatorStore& gdd_store, const DessinConvention& conv,
                                int max_d) {
  CheckReport rep;
  const int uid = ParamRegistry::param_id("u");
  const int vid = ParamRegistry::param_id("v");
  for (long d = 1; d <= max_d; ++d) {
    for (const DessinQuery& q : queries_for(d)) {
      const Scalar want = recursion_count(gdd_store, q);
      const Scalar got = count_dessins(q, conv, max_d);
      std::ostringstream label;
      label << "k=" << q.k << " l=" << q.l << " lambda=(";
      for (size_t i = 0; i < q.lambda.size(); ++i) label << (i ? "," : "") << q.lambda[i];
      label << ")";
      rep.require(got == want, "oracle " + got.str() + " != recursion " + want.str() +
                                   " at " + label.str());
    }
    // Support check: every stored monomial of weight d lies on an admissible
    // line with both exponents at least 1, so the split enumeration above
    // saw every nonzero coefficient.
    for (const auto& lam : partitions_of(d)) {
      const long m = static_cast<long>(lam.size());
      for (long g = 0; 2 * g - 2 <= d - m - 2; ++g) {
        Insertions key;
        for (long p : lam) key.push_back(VarId{p, 0});
        key = sorted_key(std::move(key));
        const Scalar* val = gdd_store.find(static_cast<int>(g), key);
        if (!val) continue;
        for (const auto& [mono, c] : val->terms()) {
          long ju = 0, jv = 0;
          for (const auto& [id, e] : mono) {
            if (id == uid) ju = e;
            if (id == vid) jv = e;
          }
          rep.require(ju >= 1 && jv >= 1 && ju + jv == d - m - (2 * g - 2),
                      "stored monomial off the admissible support at genus " +
                          std::to_string(g) + ", " +
                          key_str(gdd_store.var_prefix, static_cast<int>(g), key));
        }
      }
    }
  }
  return rep;
}

CheckReport dessin_transitivity_check(int max_d) {
  CheckReport rep;
  for (int d = 1; d <= max_d; ++d) {
    mpz_class rhs = 0;
    for (int s = 1; s <= d; ++s) {
      const mpq_class choose = binomial(static_cast<unsigned>(d - 1), static_cast<unsigned>(s - 1));
      const mpz_class rest(static_cast<long>(factorial_ll(d - s)));
      rhs += choose.get_num() * static_cast<long>(transitive_pair_total(s)) * rest * rest;
    }
    const mpz_class df(static_cast<long>(factorial_ll(d)));
    const mpz_class all = df * df;
    rep.require(rhs == all, "orbit decomposition of S_" + std::to_string(d) +
                                " pairs does not close");
  }
  return rep;
}

}  // namespace vcf
