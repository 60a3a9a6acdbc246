#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vcf/params.hpp"

namespace vcf {

using Scalar = ParamScalar;

/// Dense vector over the exact scalar ring.
class StateVec {
 public:
  StateVec() = default;
  explicit StateVec(size_t n) : v_(n) {}

  size_t dim() const { return v_.size(); }
  Scalar& operator[](size_t i) { return v_.at(i); }
  const Scalar& operator[](size_t i) const { return v_.at(i); }

  bool is_zero() const;
  StateVec operator-() const;
  StateVec& operator+=(const StateVec& o);
  StateVec& operator-=(const StateVec& o);
  friend StateVec operator+(StateVec a, const StateVec& b) { return a += b; }
  friend StateVec operator-(StateVec a, const StateVec& b) { return a -= b; }
  friend StateVec operator*(const Scalar& c, StateVec v);
  friend bool operator==(const StateVec& a, const StateVec& b) { return a.v_ == b.v_; }

  std::string str() const;

 private:
  std::vector<Scalar> v_;
};

/// Dense endomorphism over the exact scalar ring (row-major).
class StateEnd {
 public:
  StateEnd() = default;
  explicit StateEnd(size_t n) : n_(n), a_(n * n) {}
  static StateEnd identity(size_t n);

  size_t dim() const { return n_; }
  Scalar& at(size_t i, size_t j) { return a_.at(i * n_ + j); }
  const Scalar& at(size_t i, size_t j) const { return a_.at(i * n_ + j); }

  bool is_zero() const;
  StateEnd operator-() const;
  StateEnd& operator+=(const StateEnd& o);
  StateEnd& operator-=(const StateEnd& o);
  friend StateEnd operator+(StateEnd a, const StateEnd& b) { return a += b; }
  friend StateEnd operator-(StateEnd a, const StateEnd& b) { return a -= b; }
  friend StateEnd operator*(const Scalar& c, StateEnd m);
  friend StateEnd operator*(const StateEnd& a, const StateEnd& b);
  friend bool operator==(const StateEnd& a, const StateEnd& b) {
    return a.n_ == b.n_ && a.a_ == b.a_;
  }

  StateVec apply(const StateVec& v) const;
  StateEnd transpose() const;
  Scalar trace() const;
  StateEnd pow(unsigned e) const;

  /// Division-free determinant (subset dynamic programming), exact.
  Scalar det() const;
  /// Adjugate matrix: adj(A)·A = det(A)·I.  Division-free.
  StateEnd adjugate() const;
  /// Exact inverse via adjugate; throws std::domain_error when det(A) is not
  /// invertible in the scalar ring.
  StateEnd inverse() const;

  std::string str() const;

 private:
  size_t n_ = 0;
  std::vector<Scalar> a_;
};

/// Nondegenerate symmetric bilinear pairing given by its Gram matrix.
class Pairing {
 public:
  Pairing() = default;
  explicit Pairing(StateEnd gram);

  size_t dim() const { return g_.dim(); }
  const StateEnd& gram() const { return g_; }
  const StateEnd& gram_inverse() const { return ginv_; }

  Scalar eval(const StateVec& x, const StateVec& y) const;
  /// Adjoint with respect to the pairing: eval(Ax, y) == eval(x, adjoint(A)y).
  StateEnd adjoint(const StateEnd& a) const;
  bool is_self_adjoint(const StateEnd& a) const { return adjoint(a) == a; }
  bool is_anti_self_adjoint(const StateEnd& a) const { return adjoint(a) == -a; }

 private:
  StateEnd g_, ginv_;
};

}  // namespace vcf
