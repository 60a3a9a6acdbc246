#include "vcf/linalg.hpp"

#include <sstream>
#include <stdexcept>

namespace vcf {

bool StateVec::is_zero() const {
  for (const auto& c : v_)
    if (!c.is_zero()) return false;
  return true;
}

StateVec StateVec::operator-() const {
  StateVec out(*this);
  for (auto& c : out.v_) c = -c;
  return out;
}

StateVec& StateVec::operator+=(const StateVec& o) {
  if (v_.size() != o.v_.size()) throw std::invalid_argument("vector dimension mismatch");
  for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

StateVec& StateVec::operator-=(const StateVec& o) {
  if (v_.size() != o.v_.size()) throw std::invalid_argument("vector dimension mismatch");
  for (size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

StateVec operator*(const Scalar& c, StateVec v) {
  for (auto& x : v.v_) x = c * x;
  return v;
}

std::string StateVec::str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < v_.size(); ++i) {
    if (i) os << ", ";
    os << v_[i].str();
  }
  os << ']';
  return os.str();
}

StateEnd StateEnd::identity(size_t n) {
  StateEnd m(n);
  for (size_t i = 0; i < n; ++i) m.at(i, i) = Scalar(1);
  return m;
}

bool StateEnd::is_zero() const {
  for (const auto& c : a_)
    if (!c.is_zero()) return false;
  return true;
}

StateEnd StateEnd::operator-() const {
  StateEnd out(*this);
  for (auto& c : out.a_) c = -c;
  return out;
}

StateEnd& StateEnd::operator+=(const StateEnd& o) {
  if (n_ != o.n_) throw std::invalid_argument("matrix dimension mismatch");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

StateEnd& StateEnd::operator-=(const StateEnd& o) {
  if (n_ != o.n_) throw std::invalid_argument("matrix dimension mismatch");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

StateEnd operator*(const Scalar& c, StateEnd m) {
  for (auto& x : m.a_) x = c * x;
  return m;
}

StateEnd operator*(const StateEnd& a, const StateEnd& b) {
  if (a.n_ != b.n_) throw std::invalid_argument("matrix dimension mismatch");
  StateEnd out(a.n_);
  for (size_t i = 0; i < a.n_; ++i)
    for (size_t k = 0; k < a.n_; ++k) {
      const Scalar& aik = a.at(i, k);
      if (aik.is_zero()) continue;
      for (size_t j = 0; j < a.n_; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

StateVec StateEnd::apply(const StateVec& v) const {
  if (v.dim() != n_) throw std::invalid_argument("matrix/vector dimension mismatch");
  StateVec out(n_);
  for (size_t i = 0; i < n_; ++i)
    for (size_t j = 0; j < n_; ++j) {
      if (at(i, j).is_zero()) continue;
      out[i] += at(i, j) * v[j];
    }
  return out;
}

StateEnd StateEnd::transpose() const {
  StateEnd out(n_);
  for (size_t i = 0; i < n_; ++i)
    for (size_t j = 0; j < n_; ++j) out.at(j, i) = at(i, j);
  return out;
}

Scalar StateEnd::trace() const {
  Scalar t;
  for (size_t i = 0; i < n_; ++i) t += at(i, i);
  return t;
}

StateEnd StateEnd::pow(unsigned e) const {
  StateEnd out = identity(n_);
  for (unsigned k = 0; k < e; ++k) out = out * *this;
  return out;
}

namespace {

// det of the submatrix on rows 0..|S|-1 and column set S, for every subset S,
// by expansion along the last row of the submatrix.  Division-free.
std::vector<Scalar> subset_minors(const StateEnd& a) {
  size_t n = a.dim();
  if (n > 16) throw std::invalid_argument("determinant supported up to dimension 16");
  std::vector<Scalar> d(size_t(1) << n);
  d[0] = Scalar(1);
  for (uint32_t s = 1; s < (uint32_t(1) << n); ++s) {
    size_t row = size_t(__builtin_popcount(s)) - 1;
    Scalar acc;
    int pos = 0;
    for (size_t j = 0; j < n; ++j) {
      if (!(s & (uint32_t(1) << j))) continue;
      if (!a.at(row, j).is_zero()) {
        Scalar term = a.at(row, j) * d[s & ~(uint32_t(1) << j)];
        if (pos % 2 == static_cast<int>(row) % 2)
          acc += term;  // sign (-1)^{row+pos}
        else
          acc -= term;
      }
      ++pos;
    }
    d[s] = acc;
  }
  return d;
}

}  // namespace

Scalar StateEnd::det() const {
  if (n_ == 0) return Scalar(1);
  return subset_minors(*this).back();
}

StateEnd StateEnd::adjugate() const {
  StateEnd out(n_);
  if (n_ == 0) return out;
  if (n_ == 1) {
    out.at(0, 0) = Scalar(1);
    return out;
  }
  // adj(A)_{ji} = (-1)^{i+j} det(A with row i and column j removed)
  for (size_t i = 0; i < n_; ++i) {
    StateEnd sub(n_ - 1);
    for (size_t j = 0; j < n_; ++j) {
      for (size_t r = 0, rr = 0; r < n_; ++r) {
        if (r == i) continue;
        for (size_t c = 0, cc = 0; c < n_; ++c) {
          if (c == j) continue;
          sub.at(rr, cc) = at(r, c);
          ++cc;
        }
        ++rr;
      }
      Scalar m = sub.det();
      if ((i + j) % 2) m = -m;
      out.at(j, i) = m;
    }
  }
  return out;
}

StateEnd StateEnd::inverse() const {
  Scalar d = det();
  Scalar dinv = d.inverse();  // throws when not invertible
  StateEnd adj = adjugate();
  for (size_t i = 0; i < n_; ++i)
    for (size_t j = 0; j < n_; ++j) adj.at(i, j) = dinv * adj.at(i, j);
  return adj;
}

std::string StateEnd::str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < n_; ++i) {
    if (i) os << "; ";
    for (size_t j = 0; j < n_; ++j) {
      if (j) os << ", ";
      os << at(i, j).str();
    }
  }
  os << ']';
  return os.str();
}

Pairing::Pairing(StateEnd gram) : g_(std::move(gram)) {
  if (!(g_ == g_.transpose())) throw std::invalid_argument("pairing must be symmetric");
  ginv_ = g_.inverse();
}

Scalar Pairing::eval(const StateVec& x, const StateVec& y) const {
  if (x.dim() != g_.dim() || y.dim() != g_.dim())
    throw std::invalid_argument("pairing dimension mismatch");
  Scalar out;
  for (size_t i = 0; i < g_.dim(); ++i) {
    if (x[i].is_zero()) continue;
    for (size_t j = 0; j < g_.dim(); ++j) {
      if (g_.at(i, j).is_zero() || y[j].is_zero()) continue;
      out += x[i] * g_.at(i, j) * y[j];
    }
  }
  return out;
}

StateEnd Pairing::adjoint(const StateEnd& a) const {
  return ginv_ * a.transpose() * g_;
}

}  // namespace vcf
