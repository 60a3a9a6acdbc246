#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "vcf/linalg.hpp"

namespace vcf {

/// Raised whenever a series coefficient is requested (directly or inside a
/// product/residue) that the tracked windows cannot determine.  Callers must
/// widen the source windows; results are never silently truncated.
struct WindowError : std::runtime_error {
  explicit WindowError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
constexpr long kNegInf = std::numeric_limits<long>::min() / 4;
constexpr long kPosInf = std::numeric_limits<long>::max() / 4;
}  // namespace detail

/// Formal Laurent series in z with coefficients in T (Scalar, StateVec or
/// StateEnd).  Coefficients are stored on the window [lo, hi]; the flags
/// assert that every coefficient below/above the window vanishes.  Without a
/// flag, out-of-window coefficients are *unknown*, and reading them throws.
template <class T>
class ZSeries {
 public:
  ZSeries() = default;
  ZSeries(T zero, int lo, int hi, bool zero_below, bool zero_above)
      : zero_(std::move(zero)),
        lo_(lo),
        hi_(hi),
        zero_below_(zero_below),
        zero_above_(zero_above) {
    if (hi_ < lo_) {
      lo_ = 0;
      hi_ = -1;  // canonical empty window
    }
    c_.assign(static_cast<size_t>(hi_ - lo_ + 1), zero_);
  }

  /// The identically-zero series with fully known support.
  static ZSeries zero_series(T zero) { return ZSeries(std::move(zero), 0, -1, true, true); }

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  bool zero_below() const { return zero_below_; }
  bool zero_above() const { return zero_above_; }
  const T& zero_element() const { return zero_; }

  bool known(int k) const {
    if (k >= lo_ && k <= hi_) return true;
    if (k < lo_) return zero_below_;
    return zero_above_;
  }

  /// Coefficient of z^k; throws WindowError when unknown.
  const T& at(int k) const {
    if (k >= lo_ && k <= hi_) return c_[static_cast<size_t>(k - lo_)];
    if (known(k)) return zero_;
    throw WindowError("series coefficient z^" + std::to_string(k) +
                      " outside known window [" + std::to_string(lo_) + "," +
                      std::to_string(hi_) + "]");
  }

  /// Mutable access to a stored coefficient.
  T& ref(int k) {
    if (k < lo_ || k > hi_)
      throw WindowError("series coefficient z^" + std::to_string(k) + " not stored");
    return c_[static_cast<size_t>(k - lo_)];
  }

  /// Lowest possibly-nonzero degree (kNegInf when unbounded below).
  long support_lo() const { return zero_below_ ? (empty() ? detail::kPosInf : lo_) : detail::kNegInf; }
  /// Highest possibly-nonzero degree (kPosInf when unbounded above).
  long support_hi() const { return zero_above_ ? (empty() ? detail::kNegInf : hi_) : detail::kPosInf; }
  /// Lowest known degree.
  long known_lo() const { return zero_below_ ? detail::kNegInf : lo_; }
  /// Highest known degree.
  long known_hi() const { return zero_above_ ? detail::kPosInf : hi_; }

  bool empty() const { return hi_ < lo_; }

  /// Multiplies by z^m.
  ZSeries shift(int m) const {
    ZSeries out(*this);
    out.lo_ += m;
    out.hi_ += m;
    return out;
  }

  /// Substitutes z → −z.
  ZSeries negate_z() const {
    ZSeries out(*this);
    for (int k = lo_; k <= hi_; ++k)
      if (k % 2 != 0) out.ref(k) = -out.at(k);
    return out;
  }

  ZSeries operator-() const {
    ZSeries out(*this);
    for (auto& x : out.c_) x = -x;
    return out;
  }

  friend ZSeries operator+(const ZSeries& a, const ZSeries& b) { return combine(a, b, false); }
  friend ZSeries operator-(const ZSeries& a, const ZSeries& b) { return combine(a, b, true); }

  friend ZSeries operator*(const Scalar& c, const ZSeries& s) {
    ZSeries out(s);
    for (auto& x : out.c_) x = c * x;
    return out;
  }

  /// True when every known coefficient vanishes and both flags are set
  /// (i.e. the series is provably zero).
  bool is_provably_zero() const {
    if (!zero_below_ || !zero_above_) return false;
    for (const auto& x : c_)
      if (!is_zero_coeff(x)) return false;
    return true;
  }

  /// Restricts/extends to an explicitly requested stored window; every
  /// requested coefficient must be known.
  ZSeries rewindow(int lo, int hi) const {
    ZSeries out(zero_, lo, hi, zero_below_ && lo <= lo_, zero_above_ && hi >= hi_);
    if (empty()) {
      out.zero_below_ = zero_below_;
      out.zero_above_ = zero_above_;
    }
    for (int k = lo; k <= hi; ++k) out.ref(k) = at(k);
    return out;
  }

 private:
  static bool is_zero_coeff(const Scalar& s) { return s.is_zero(); }
  static bool is_zero_coeff(const StateVec& v) { return v.is_zero(); }
  static bool is_zero_coeff(const StateEnd& m) { return m.is_zero(); }

  static ZSeries combine(const ZSeries& a, const ZSeries& b, bool subtract) {
    long klo = std::max(a.known_lo(), b.known_lo());
    long khi = std::min(a.known_hi(), b.known_hi());
    // Store the union of stored windows clipped to the known interval.
    long slo = std::min<long>(a.empty() ? b.lo_ : a.lo_, b.empty() ? a.lo_ : b.lo_);
    long shi = std::max<long>(a.empty() ? b.hi_ : a.hi_, b.empty() ? a.hi_ : b.hi_);
    if (a.empty() && b.empty()) {
      slo = 0;
      shi = -1;
    }
    long lo = std::max(slo, klo);
    long hi = std::min(shi, khi);
    ZSeries out(a.zero_, static_cast<int>(std::max(lo, detail::kNegInf + 1)),
                static_cast<int>(std::min(hi, detail::kPosInf - 1)),
                a.zero_below_ && b.zero_below_, a.zero_above_ && b.zero_above_);
    // Losing known coefficients outside the stored union is fine: they are
    // all zero there (both flagged), and the flags carry that fact.
    for (int k = out.lo_; k <= out.hi_; ++k) {
      T v = a.at(k);
      if (subtract)
        v -= b.at(k);
      else
        v += b.at(k);
      out.ref(k) = v;
    }
    return out;
  }

  T zero_{};
  int lo_ = 0;
  int hi_ = -1;
  bool zero_below_ = true;
  bool zero_above_ = true;
  std::vector<T> c_;
};

/// Coefficient of z^d in the product a·b, with combine(a_i, b_{d-i})
/// accumulated by +=.  Throws WindowError unless the contributing index set
/// is finite and fully known on both sides.
template <class TA, class TB, class TOut, class Combine>
TOut product_coefficient(const ZSeries<TA>& a, const ZSeries<TB>& b, int d, Combine&& combine,
                         const TOut& zero_out) {
  long ilo = std::max(a.support_lo(), d - b.support_hi());
  long ihi = std::min(a.support_hi(), d - b.support_lo());
  TOut acc = zero_out;
  if (ilo > ihi) return acc;  // empty contribution: coefficient is exactly 0
  if (ilo <= detail::kNegInf || ihi >= detail::kPosInf)
    throw WindowError("product coefficient z^" + std::to_string(d) +
                      " has unbounded contribution range");
  for (long i = ilo; i <= ihi; ++i) {
    if (!a.known(static_cast<int>(i)) || !b.known(static_cast<int>(d - i)))
      throw WindowError("product coefficient z^" + std::to_string(d) +
                        " depends on coefficients outside known windows");
    acc += combine(a.at(static_cast<int>(i)), b.at(static_cast<int>(d - i)));
  }
  return acc;
}

/// Product restricted to an explicitly requested window [dlo, dhi].
template <class TA, class TB, class TOut, class Combine>
ZSeries<TOut> series_mul(const ZSeries<TA>& a, const ZSeries<TB>& b, int dlo, int dhi,
                         Combine&& combine, const TOut& zero_out) {
  long nat_lo = a.support_lo() + b.support_lo();
  long nat_hi = a.support_hi() + b.support_hi();
  bool zb = a.zero_below() && b.zero_below() && dlo <= nat_lo;
  bool za = a.zero_above() && b.zero_above() && dhi >= nat_hi;
  ZSeries<TOut> out(zero_out, dlo, dhi, zb, za);
  for (int d = dlo; d <= dhi; ++d) out.ref(d) = product_coefficient(a, b, d, combine, zero_out);
  return out;
}

/// Full product when both supports are bounded on both sides.
template <class TA, class TB, class TOut, class Combine>
ZSeries<TOut> series_mul_full(const ZSeries<TA>& a, const ZSeries<TB>& b, Combine&& combine,
                              const TOut& zero_out) {
  long nat_lo = a.support_lo() + b.support_lo();
  long nat_hi = a.support_hi() + b.support_hi();
  if (nat_lo > nat_hi) return ZSeries<TOut>::zero_series(zero_out);
  if (nat_lo <= detail::kNegInf || nat_hi >= detail::kPosInf)
    throw WindowError("full product requires bounded supports on both factors");
  return series_mul(a, b, static_cast<int>(nat_lo), static_cast<int>(nat_hi), combine, zero_out);
}

/// Matrix-series product.
inline ZSeries<StateEnd> series_mul(const ZSeries<StateEnd>& a, const ZSeries<StateEnd>& b,
                                    int dlo, int dhi) {
  return series_mul(a, b, dlo, dhi,
                    [](const StateEnd& x, const StateEnd& y) { return x * y; },
                    StateEnd(a.zero_element().dim()));
}

/// Matrix-series acting on a vector-series.
inline ZSeries<StateVec> series_apply(const ZSeries<StateEnd>& a, const ZSeries<StateVec>& v,
                                      int dlo, int dhi) {
  return series_mul(a, v, dlo, dhi,
                    [](const StateEnd& m, const StateVec& x) { return m.apply(x); },
                    StateVec(a.zero_element().dim()));
}

/// Inverse of I + (positive-degree tail) to the requested depth, via the
/// Neumann recursion B_0 = I, B_k = −Σ_{j=1..k} A_j B_{k−j}.
ZSeries<StateEnd> series_invert(const ZSeries<StateEnd>& a, int depth);

/// Residue pairing ω(f, g) = [z^{-1}] η(f(−z), g(z)).  Finiteness must follow
/// from the support flags, otherwise WindowError.
Scalar residue_pairing(const Pairing& eta, const ZSeries<StateVec>& f, const ZSeries<StateVec>& g);

}  // namespace vcf
