#include "vcf/zseries.hpp"

namespace vcf {

ZSeries<StateEnd> series_invert(const ZSeries<StateEnd>& a, int depth) {
  size_t n = a.zero_element().dim();
  if (a.support_lo() < 0)
    throw WindowError("series inverse requires a power series (no negative-degree part)");
  StateEnd id = StateEnd::identity(n);
  if (!(a.at(0) == id))
    throw std::invalid_argument("series inverse requires constant term = identity");
  ZSeries<StateEnd> b(StateEnd(n), 0, depth, true, false);
  b.ref(0) = id;
  for (int k = 1; k <= depth; ++k) {
    StateEnd acc(n);
    for (int j = 1; j <= k; ++j) {
      const StateEnd& aj = a.at(j);  // throws if the window is too small
      if (aj.is_zero()) continue;
      acc += aj * b.at(k - j);
    }
    b.ref(k) = -acc;
  }
  return b;
}

Scalar residue_pairing(const Pairing& eta, const ZSeries<StateVec>& f,
                       const ZSeries<StateVec>& g) {
  const int d = -1;
  long ilo = std::max(f.support_lo(), d - g.support_hi());
  long ihi = std::min(f.support_hi(), d - g.support_lo());
  Scalar acc;
  if (ilo > ihi) return acc;
  if (ilo <= detail::kNegInf || ihi >= detail::kPosInf)
    throw WindowError("residue pairing has unbounded contribution range");
  for (long i = ilo; i <= ihi; ++i) {
    int k = static_cast<int>(i);
    if (!f.known(k) || !g.known(d - k))
      throw WindowError("residue pairing depends on coefficients outside known windows");
    Scalar term = eta.eval(f.at(k), g.at(d - k));
    if (k % 2 != 0) term = -term;  // from f(−z)
    acc += term;
  }
  return acc;
}

}  // namespace vcf
