#include "vcf/params.hpp"

#include <algorithm>
#include <cstdlib>
#include <iterator>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace vcf {

namespace {

struct RegistryState {
  std::mutex mu;
  std::vector<std::string> names;
  std::map<std::string, int> by_name;
  std::vector<ParamRegistry::Factor> factors;
};

RegistryState& reg() {
  static RegistryState s;
  return s;
}

}  // namespace

int ParamRegistry::param_id(const std::string& name) {
  if (name.empty()) throw std::invalid_argument("empty parameter name");
  auto& r = reg();
  std::lock_guard<std::mutex> lock(r.mu);
  auto it = r.by_name.find(name);
  if (it != r.by_name.end()) return it->second;
  int id = static_cast<int>(r.names.size());
  r.names.push_back(name);
  r.by_name.emplace(name, id);
  return id;
}

const std::string& ParamRegistry::param_name(int id) {
  auto& r = reg();
  std::lock_guard<std::mutex> lock(r.mu);
  if (id < 0 || id >= static_cast<int>(r.names.size()))
    throw std::out_of_range("unknown parameter id");
  return r.names[static_cast<size_t>(id)];
}

std::optional<int> ParamRegistry::lookup_param(const std::string& name) {
  auto& r = reg();
  std::lock_guard<std::mutex> lock(r.mu);
  auto it = r.by_name.find(name);
  if (it == r.by_name.end()) return std::nullopt;
  return it->second;
}

int ParamRegistry::factor_id(const std::string& xi_name, const GaussianRational& lambda,
                             const std::string& xj_name) {
  if (lambda.is_zero()) throw std::invalid_argument("denominator factor with zero coefficient");
  int xi = param_id(xi_name);
  int xj = param_id(xj_name);
  if (xi == xj) throw std::invalid_argument("denominator factor must involve two parameters");
  auto& r = reg();
  std::lock_guard<std::mutex> lock(r.mu);
  for (size_t k = 0; k < r.factors.size(); ++k) {
    const Factor& f = r.factors[k];
    if (f.xi == xi && f.xj == xj) {
      if (f.lambda == lambda) return static_cast<int>(k);
      continue;  // same pair, different lambda: a genuinely different factor
    }
    // Associate detection: x_i − λ x_j  ~  x_j − λ⁻¹ x_i (unit −λ⁻¹).
    if (f.xi == xj && f.xj == xi && f.lambda * lambda == GaussianRational(1))
      throw std::invalid_argument("denominator factor is an associate of an existing one");
  }
  r.factors.push_back(Factor{xi, lambda, xj});
  return static_cast<int>(r.factors.size()) - 1;
}

const ParamRegistry::Factor& ParamRegistry::factor(int id) {
  auto& r = reg();
  std::lock_guard<std::mutex> lock(r.mu);
  if (id < 0 || id >= static_cast<int>(r.factors.size()))
    throw std::out_of_range("unknown denominator factor id");
  return r.factors[static_cast<size_t>(id)];
}

int ParamRegistry::factor_count() {
  auto& r = reg();
  std::lock_guard<std::mutex> lock(r.mu);
  return static_cast<int>(r.factors.size());
}

std::string ParamRegistry::factor_str(int id) {
  Factor f = factor(id);
  GaussianRational neg = -f.lambda;
  std::ostringstream os;
  os << param_name(f.xi);
  std::string c = neg.str();
  if (c == "1") {
    os << '+' << param_name(f.xj);
  } else if (c == "-1") {
    os << '-' << param_name(f.xj);
  } else if (c.find('+', 1) != std::string::npos || c.find('-', 1) != std::string::npos) {
    os << "+(" << c << ")*" << param_name(f.xj);
  } else {
    if (c[0] != '-') os << '+';
    os << c << '*' << param_name(f.xj);
  }
  return os.str();
}

std::optional<int> ParamRegistry::lookup_factor_str(const std::string& text) {
  int n = factor_count();
  for (int k = 0; k < n; ++k)
    if (factor_str(k) == text) return k;
  return std::nullopt;
}

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      int e = a[i].second + b[j].second;
      if (e != 0) out.emplace_back(a[i].first, e);
      ++i;
      ++j;
    }
  }
  return out;
}

Monomial mono_inv(const Monomial& a) {
  Monomial out = a;
  for (auto& p : out) p.second = -p.second;
  return out;
}

Monomial mono_pow(const Monomial& a, int e) {
  if (e == 0) return {};
  Monomial out = a;
  for (auto& p : out) p.second *= e;
  return out;
}

int mono_cmp(const Monomial& a, const Monomial& b) {
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    int ida = i < a.size() ? a[i].first : std::numeric_limits<int>::max();
    int idb = j < b.size() ? b[j].first : std::numeric_limits<int>::max();
    int ea = 0, eb = 0;
    if (ida <= idb) ea = a[i].second;
    if (idb <= ida) eb = b[j].second;
    if (ida < idb) {
      ++i;
    } else if (idb < ida) {
      ++j;
    } else {
      ++i;
      ++j;
    }
    if (ea != eb) return ea < eb ? -1 : 1;
  }
  return 0;
}

ParamScalar ParamScalar::from_rational(const GaussianRational& q) {
  ParamScalar s;
  if (!q.is_zero()) s.terms_.emplace(Monomial{}, q);
  return s;
}

ParamScalar ParamScalar::parameter(const std::string& name, int exponent) {
  if (exponent == 0) return ParamScalar(1);
  ParamScalar s;
  s.terms_.emplace(Monomial{{ParamRegistry::param_id(name), exponent}}, GaussianRational(1));
  return s;
}

ParamScalar ParamScalar::monomial(const Monomial& m, const GaussianRational& coeff) {
  ParamScalar s;
  if (!coeff.is_zero()) s.terms_.emplace(m, coeff);
  return s;
}

bool ParamScalar::is_rational() const {
  if (terms_.empty()) return true;
  return den_.empty() && terms_.size() == 1 && terms_.begin()->first.empty();
}

GaussianRational ParamScalar::rational_value() const {
  if (terms_.empty()) return GaussianRational(0);
  if (!is_rational()) throw std::domain_error("scalar is not a rational constant: " + str());
  return terms_.begin()->second;
}

ParamScalar ParamScalar::operator-() const {
  ParamScalar s = *this;
  for (auto& [m, c] : s.terms_) c = -c;
  return s;
}

namespace {

using TermMap = std::map<Monomial, GaussianRational>;

void add_term(TermMap& into, const Monomial& m, const GaussianRational& c) {
  if (c.is_zero()) return;
  auto it = into.find(m);
  if (it == into.end()) {
    into.emplace(m, c);
  } else {
    it->second += c;
    if (it->second.is_zero()) into.erase(it);
  }
}

TermMap term_mul(const TermMap& a, const TermMap& b) {
  TermMap out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) add_term(out, mono_mul(ma, mb), ca * cb);
  return out;
}

// Expansion of one factor to the given power as a term map.
TermMap factor_terms(int fid, unsigned power) {
  const auto& f = ParamRegistry::factor(fid);
  TermMap lin;
  lin.emplace(Monomial{{f.xi, 1}}, GaussianRational(1));
  add_term(lin, Monomial{{f.xj, 1}}, -f.lambda);
  TermMap out;
  out.emplace(Monomial{}, GaussianRational(1));
  for (unsigned k = 0; k < power; ++k) out = term_mul(out, lin);
  return out;
}

// Exact division of `num` by the factor, assuming divisibility (checked by
// divisible_by_factor beforehand).  Leading-term elimination in the
// multiplication-compatible order; terminates because the remainder's set of
// monomials strictly decreases in that order.
TermMap divide_by_factor(TermMap num, int fid) {
  const auto& f = ParamRegistry::factor(fid);
  TermMap divisor;
  divisor.emplace(Monomial{{f.xi, 1}}, GaussianRational(1));
  add_term(divisor, Monomial{{f.xj, 1}}, -f.lambda);

  auto max_term = [](const TermMap& t) {
    auto best = t.begin();
    for (auto it = std::next(t.begin()); it != t.end(); ++it)
      if (mono_cmp(it->first, best->first) > 0) best = it;
    return best;
  };

  auto dlead = max_term(divisor);
  const Monomial dmono = dlead->first;
  const GaussianRational dcoeff = dlead->second;
  TermMap dtail = divisor;
  dtail.erase(dmono);

  TermMap quotient;
  size_t guard = 0;
  const size_t guard_max = 4 * (num.size() + 4) * (num.size() + 4) + 100000;
  while (!num.empty()) {
    if (++guard > guard_max)
      throw std::logic_error("factor division did not terminate; divisibility precondition violated");
    auto lead = max_term(num);
    GaussianRational qc = lead->second * dcoeff.inverse();
    Monomial qm = mono_mul(lead->first, mono_inv(dmono));
    add_term(quotient, qm, qc);
    num.erase(lead);
    for (const auto& [tm, tc] : dtail) add_term(num, mono_mul(qm, tm), -(qc * tc));
  }
  return quotient;
}

}  // namespace

bool divisible_by_factor(const TermMap& terms, int factor_id) {
  // Substitute x_i := λ x_j; the factor's kernel is exactly its multiples
  // (the Laurent ring modulo the factor is an integral domain).
  const auto& f = ParamRegistry::factor(factor_id);
  TermMap image;
  for (const auto& [m, c] : terms) {
    Monomial out;
    int e_i = 0;
    out.reserve(m.size());
    for (const auto& p : m) {
      if (p.first == f.xi)
        e_i = p.second;
      else
        out.push_back(p);
    }
    GaussianRational coeff = c;
    if (e_i != 0) {
      Monomial xj{{f.xj, e_i}};
      out = mono_mul(out, xj);
      GaussianRational lp = f.lambda;
      if (e_i < 0) lp = lp.inverse();
      for (int k = 0; k < std::abs(e_i); ++k) coeff = coeff * lp;
    }
    add_term(image, out, coeff);
    // no early exit: cancellations may occur in any order
  }
  return image.empty();
}

void ParamScalar::reduce() {
  if (terms_.empty()) {
    den_.clear();
    return;
  }
  for (auto it = den_.begin(); it != den_.end();) {
    while (it->second > 0 && divisible_by_factor(terms_, it->first)) {
      terms_ = divide_by_factor(std::move(terms_), it->first);
      --it->second;
    }
    if (it->second == 0)
      it = den_.erase(it);
    else
      ++it;
  }
}

ParamScalar& ParamScalar::operator+=(const ParamScalar& o) {
  if (o.terms_.empty()) return *this;
  if (terms_.empty()) {
    *this = o;
    return *this;
  }
  if (den_ == o.den_) {
    for (const auto& [m, c] : o.terms_) add_term(terms_, m, c);
    reduce();
    return *this;
  }
  // Bring both to the common denominator lcm (per-factor max power).
  std::map<int, unsigned> lcm = den_;
  for (const auto& [f, p] : o.den_) {
    auto it = lcm.find(f);
    if (it == lcm.end())
      lcm.emplace(f, p);
    else
      it->second = std::max(it->second, p);
  }
  TermMap left = terms_;
  for (const auto& [f, p] : lcm) {
    unsigned have = 0;
    if (auto it = den_.find(f); it != den_.end()) have = it->second;
    if (p > have) left = term_mul(left, factor_terms(f, p - have));
  }
  TermMap right = o.terms_;
  for (const auto& [f, p] : lcm) {
    unsigned have = 0;
    if (auto it = o.den_.find(f); it != o.den_.end()) have = it->second;
    if (p > have) right = term_mul(right, factor_terms(f, p - have));
  }
  for (const auto& [m, c] : right) add_term(left, m, c);
  terms_ = std::move(left);
  den_ = std::move(lcm);
  reduce();
  return *this;
}

ParamScalar& ParamScalar::operator-=(const ParamScalar& o) { return *this += -o; }

ParamScalar operator*(const ParamScalar& a, const ParamScalar& b) {
  ParamScalar out;
  if (a.terms_.empty() || b.terms_.empty()) return out;
  out.terms_ = term_mul(a.terms_, b.terms_);
  out.den_ = a.den_;
  for (const auto& [f, p] : b.den_) out.den_[f] += p;
  // Each input's numerator is coprime to its own denominator, but may still
  // be divisible by the *other* input's denominator factors, so renormalize.
  out.reduce();
  return out;
}

ParamScalar& ParamScalar::operator*=(const ParamScalar& o) {
  *this = *this * o;
  return *this;
}

ParamScalar ParamScalar::inverse() const {
  if (terms_.empty()) throw std::domain_error("division by zero scalar");
  // Strip every registered factor out of the numerator.
  TermMap num = terms_;
  std::map<int, unsigned> stripped;
  int nf = ParamRegistry::factor_count();
  for (int f = 0; f < nf; ++f) {
    while (num.size() > 1 && divisible_by_factor(num, f)) {
      num = divide_by_factor(std::move(num), f);
      ++stripped[f];
    }
  }
  if (num.size() != 1)
    throw std::domain_error("scalar has no exact inverse in this coefficient domain: " + str());
  const Monomial& m = num.begin()->first;
  const GaussianRational& c = num.begin()->second;

  // this = (c·m·∏f^{stripped_f}) / ∏f^{den_f}
  // inverse = (1/(c·m))·∏f^{den_f} / ∏f^{stripped_f}
  ParamScalar out;
  out.terms_.emplace(mono_inv(m), c.inverse());
  for (const auto& [f, p] : den_) {
    unsigned s = 0;
    if (auto it = stripped.find(f); it != stripped.end()) s = it->second;
    if (p > s) out.terms_ = term_mul(out.terms_, factor_terms(f, p - s));
  }
  for (const auto& [f, p] : stripped) {
    unsigned d = 0;
    if (auto it = den_.find(f); it != den_.end()) d = it->second;
    if (p > d) out.den_[f] = p - d;
  }
  // Numerator built from the den-side factors is not divisible by any
  // remaining denominator factor (UFD, distinct irreducibles), but reduce()
  // also covers the degenerate case of coinciding factors.
  out.reduce();
  return out;
}

ParamScalar ParamScalar::pow(int e) const {
  if (e == 0) return ParamScalar(1);
  ParamScalar base = e > 0 ? *this : inverse();
  int n = std::abs(e);
  ParamScalar out(1);
  for (int k = 0; k < n; ++k) out *= base;
  return out;
}

ParamScalar ParamScalar::subst(const std::map<int, ParamScalar>& images) const {
  for (const auto& [f, p] : den_) {
    (void)p;
    const auto& fac = ParamRegistry::factor(f);
    if (images.count(fac.xi) || images.count(fac.xj))
      throw std::domain_error("substitution touches a denominator factor");
  }
  // Validate images: single-term numerators, no denominators.
  for (const auto& [id, img] : images) {
    (void)id;
    if (img.terms_.size() != 1 || !img.den_.empty())
      throw std::domain_error("substitution image must be a single term");
  }
  ParamScalar out;
  out.den_ = den_;
  for (const auto& [m, c] : terms_) {
    Monomial base;
    GaussianRational coeff = c;
    Monomial extra;  // accumulated from images
    bool ok = true;
    for (const auto& p : m) {
      auto it = images.find(p.first);
      if (it == images.end()) {
        base.push_back(p);
        continue;
      }
      const auto& [im, ic] = *it->second.terms_.begin();
      if (p.second < 0 && ic.is_zero()) ok = false;
      GaussianRational icp = p.second >= 0 ? ic : ic.inverse();
      for (int k = 0; k < std::abs(p.second); ++k) coeff = coeff * icp;
      extra = mono_mul(extra, mono_pow(im, p.second));
    }
    if (!ok) throw std::domain_error("substitution image not invertible");
    add_term(out.terms_, mono_mul(base, extra), coeff);
  }
  out.reduce();
  return out;
}

std::string ParamScalar::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    std::string cs = c.str();
    bool negated = false;
    if (!first) {
      if (!cs.empty() && cs[0] == '-' && cs.find('+', 1) == std::string::npos &&
          cs.find('-', 1) == std::string::npos) {
        os << " - ";
        cs = cs.substr(1);
        negated = true;
      } else {
        os << " + ";
      }
    }
    (void)negated;
    bool composite = cs.find('+', 1) != std::string::npos || cs.find('-', 1) != std::string::npos;
    if (m.empty()) {
      os << (composite ? "(" + cs + ")" : cs);
    } else {
      if (cs == "1") {
        // omit
      } else if (cs == "-1") {
        os << '-';
      } else {
        os << (composite ? "(" + cs + ")" : cs) << '*';
      }
      bool firstp = true;
      for (const auto& p : m) {
        if (!firstp) os << '*';
        firstp = false;
        os << ParamRegistry::param_name(p.first);
        if (p.second != 1) os << '^' << p.second;
      }
    }
    first = false;
  }
  std::string numerator = os.str();
  if (den_.empty()) return numerator;
  std::ostringstream full;
  bool multi = terms_.size() > 1;
  full << (multi ? "(" + numerator + ")" : numerator) << "/(";
  bool firstf = true;
  for (const auto& [f, p] : den_) {
    if (!firstf) full << '*';
    firstf = false;
    full << '(' << ParamRegistry::factor_str(f) << ')';
    if (p != 1) full << '^' << p;
  }
  full << ')';
  return full.str();
}

}  // namespace vcf
