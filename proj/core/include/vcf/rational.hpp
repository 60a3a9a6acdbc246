#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vcf {

/// Exact element of Q(i): a complex number with arbitrary-precision rational
/// real and imaginary parts.  Components are canonicalized on construction
/// (a raw mpq_class built from numerator/denominator is not reduced by gmp),
/// so equality is plain component comparison.
class GaussianRational {
 public:
  GaussianRational() : re_(0), im_(0) {}
  GaussianRational(long n) : re_(n), im_(0) {}                      // NOLINT(google-explicit-constructor)
  GaussianRational(long num, long den) : re_(num, den), im_(0) { re_.canonicalize(); }
  GaussianRational(mpq_class re) : re_(std::move(re)), im_(0) {     // NOLINT(google-explicit-constructor)
    re_.canonicalize();
  }
  GaussianRational(mpq_class re, mpq_class im) : re_(std::move(re)), im_(std::move(im)) {
    re_.canonicalize();
    im_.canonicalize();
  }

  static GaussianRational i() { return GaussianRational(mpq_class(0), mpq_class(1)); }

  const mpq_class& re() const { return re_; }
  const mpq_class& im() const { return im_; }

  bool is_zero() const { return re_ == 0 && im_ == 0; }
  bool is_one() const { return re_ == 1 && im_ == 0; }
  bool is_real() const { return im_ == 0; }

  GaussianRational operator-() const { return {mpq_class(-re_), mpq_class(-im_)}; }

  GaussianRational& operator+=(const GaussianRational& o) {
    re_ += o.re_;
    im_ += o.im_;
    return *this;
  }
  GaussianRational& operator-=(const GaussianRational& o) {
    re_ -= o.re_;
    im_ -= o.im_;
    return *this;
  }
  GaussianRational& operator*=(const GaussianRational& o) {
    mpq_class r = re_ * o.re_ - im_ * o.im_;
    mpq_class i = re_ * o.im_ + im_ * o.re_;
    re_ = std::move(r);
    im_ = std::move(i);
    return *this;
  }

  friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
  friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
  friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }

  GaussianRational conj() const { return {re_, mpq_class(-im_)}; }

  /// Squared modulus re² + im² (a nonnegative rational).
  mpq_class norm() const { return re_ * re_ + im_ * im_; }

  GaussianRational inverse() const {
    mpq_class n = norm();
    if (n == 0) throw std::domain_error("GaussianRational: division by zero");
    return {mpq_class(re_ / n), mpq_class(-im_ / n)};
  }

  friend GaussianRational operator/(const GaussianRational& a, const GaussianRational& b) {
    return a * b.inverse();
  }
  GaussianRational& operator/=(const GaussianRational& o) { return *this = *this / o; }

  friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }
  friend bool operator!=(const GaussianRational& a, const GaussianRational& b) { return !(a == b); }

  /// "p/q" for real values ("p" when q = 1), "p/q*i" for pure-imaginary,
  /// "a/b+c/d*i" (or "a/b-c/d*i") in general.  Round-trips through parse().
  std::string str() const {
    if (im_ == 0) return re_.get_str();
    std::string imag;
    if (im_ == 1)
      imag = "i";
    else if (im_ == -1)
      imag = "-i";
    else
      imag = im_.get_str() + "*i";
    if (re_ == 0) return imag;
    return re_.get_str() + (im_ > 0 ? "+" : "") + imag;
  }

  static GaussianRational parse(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("GaussianRational: empty string");
    auto make = [](const std::string& t) {
      mpq_class q(t);
      q.canonicalize();
      return q;
    };
    if (s.back() != 'i') return GaussianRational(make(s));
    std::string body = s.substr(0, s.size() - 1);
    if (!body.empty() && body.back() == '*') body.pop_back();
    // Split "a/b±c/d"; a sign can only start a component, so scan for the
    // last '+'/'-' that is not the leading character.
    for (size_t pos = body.size(); pos-- > 1;) {
      if (body[pos] == '+' || body[pos] == '-') {
        std::string re_part = body.substr(0, pos);
        std::string im_part = body.substr(pos);
        if (im_part == "+" || im_part == "-") im_part += "1";
        if (im_part[0] == '+') im_part = im_part.substr(1);
        return {make(re_part), make(im_part)};
      }
    }
    if (body.empty()) return {mpq_class(0), mpq_class(1)};
    if (body == "-") return {mpq_class(0), mpq_class(-1)};
    return {mpq_class(0), make(body)};
  }

 private:
  mpq_class re_, im_;
};

/// Rising factorial x(x+1)...(x+n-1) over Q; n = 0 yields 1.
inline mpq_class rising_factorial(const mpq_class& x, unsigned n) {
  mpq_class acc(1);
  mpq_class term(x);
  for (unsigned j = 0; j < n; ++j, term += 1) acc *= term;
  return acc;
}

inline mpq_class factorial(unsigned n) { return rising_factorial(mpq_class(1), n); }

inline mpq_class binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

}  // namespace vcf
