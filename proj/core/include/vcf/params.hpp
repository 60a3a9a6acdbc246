#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vcf/rational.hpp"

namespace vcf {

/// A Laurent monomial in the registered parameter symbols: sorted
/// (parameter id, nonzero exponent) pairs.  The empty vector is 1.
using Monomial = std::vector<std::pair<int, int>>;

Monomial mono_mul(const Monomial& a, const Monomial& b);
Monomial mono_inv(const Monomial& a);
Monomial mono_pow(const Monomial& a, int e);
/// Total order compatible with multiplication (dense lexicographic by
/// ascending parameter id; larger exponent on the first differing id wins).
int mono_cmp(const Monomial& a, const Monomial& b);

/// Process-wide append-only registry of parameter symbols and of declared
/// irreducible binomial denominator factors x_i − λ·x_j.  Scalars from
/// different models can coexist because ids are global.
class ParamRegistry {
 public:
  struct Factor {
    int xi;                // parameter id of the head variable
    GaussianRational lambda;  // nonzero
    int xj;                // parameter id of the tail variable, != xi
  };

  static int param_id(const std::string& name);
  static const std::string& param_name(int id);
  static std::optional<int> lookup_param(const std::string& name);

  /// Registers (or finds) the factor x_i − λ x_j.  Declaring an associate of
  /// an existing factor (same unordered variable pair with matching λ) is an
  /// error: it would break canonical forms.
  static int factor_id(const std::string& xi, const GaussianRational& lambda, const std::string& xj);
  static const Factor& factor(int id);
  static std::string factor_str(int id);
  static std::optional<int> lookup_factor_str(const std::string& text);
  static int factor_count();
};

/// Exact scalar of the coefficient domain: a Laurent polynomial in the
/// registered parameters over Q(i), divided by a product of declared
/// irreducible binomial factors.  Values are kept in canonical reduced form
/// (the numerator is divisible by none of the denominator factors), so
/// equality is structural.  A multiplicative inverse exists exactly when the
/// numerator is a single term times declared factors.
class ParamScalar {
 public:
  ParamScalar() = default;
  ParamScalar(long n) { *this = from_rational(GaussianRational(n)); }  // NOLINT
  ParamScalar(const GaussianRational& q) { *this = from_rational(q); }  // NOLINT
  ParamScalar(const mpq_class& q) { *this = from_rational(GaussianRational(q)); }  // NOLINT

  static ParamScalar from_rational(const GaussianRational& q);
  static ParamScalar parameter(const std::string& name, int exponent = 1);
  static ParamScalar monomial(const Monomial& m, const GaussianRational& coeff);

  bool is_zero() const { return terms_.empty(); }
  bool is_rational() const;
  /// Throws unless the value is a pure rational constant.
  GaussianRational rational_value() const;

  ParamScalar operator-() const;
  ParamScalar& operator+=(const ParamScalar& o);
  ParamScalar& operator-=(const ParamScalar& o);
  ParamScalar& operator*=(const ParamScalar& o);
  friend ParamScalar operator+(ParamScalar a, const ParamScalar& b) { return a += b; }
  friend ParamScalar operator-(ParamScalar a, const ParamScalar& b) { return a -= b; }
  friend ParamScalar operator*(const ParamScalar& a, const ParamScalar& b);

  /// Exact inverse; throws std::domain_error when the numerator is not a
  /// single term times declared factors.
  ParamScalar inverse() const;
  ParamScalar pow(int e) const;

  friend bool operator==(const ParamScalar& a, const ParamScalar& b) {
    return a.terms_ == b.terms_ && a.den_ == b.den_;
  }
  friend bool operator!=(const ParamScalar& a, const ParamScalar& b) { return !(a == b); }

  /// Substitutes parameters by single-term scalars (e.g. u ↦ s₁²).  Throws if
  /// an image is not a single term, or if a denominator factor involves a
  /// substituted parameter.
  ParamScalar subst(const std::map<int, ParamScalar>& images) const;

  const std::map<Monomial, GaussianRational>& terms() const { return terms_; }
  const std::map<int, unsigned>& denominator() const { return den_; }

  /// Human-readable form, deterministic.
  std::string str() const;

 private:
  void reduce();

  std::map<Monomial, GaussianRational> terms_;  // numerator, zero coeffs erased
  std::map<int, unsigned> den_;                 // factor id → positive power
};

/// numerator %  factor: exact divisibility test (kernel-of-substitution).
bool divisible_by_factor(const std::map<Monomial, GaussianRational>& terms, int factor_id);

inline ParamScalar operator*(const GaussianRational& q, ParamScalar s) {
  return ParamScalar::from_rational(q) * s;
}

}  // namespace vcf
