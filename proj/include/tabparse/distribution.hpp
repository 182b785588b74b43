#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tabparse {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// exp(logits) / sum(exp(logits)), computed after subtracting the max.
/// Entries at -inf get probability zero.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (logits.size() == 0) throw std::invalid_argument("softmax of an empty vector");
  const Scalar top = logits.maxCoeff();
  if (!std::isfinite(static_cast<double>(top))) {
    throw std::domain_error("softmax: no finite logit");
  }
  Vector<Scalar> p = (logits.array() - top).exp().matrix();
  return p / p.sum();
}

/// Rescales non-negative weights to sum to one.
template <typename Derived>
Vector<typename Derived::Scalar> normalized(const Eigen::MatrixBase<Derived>& weights) {
  const auto total = weights.sum();
  if (!(total > 0)) throw std::domain_error("cannot normalize weights with zero mass");
  return weights / total;
}

/// Elementwise product of two distributions over the same support,
/// renormalized.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> product_distribution(const Eigen::MatrixBase<DerivedA>& a,
                                                       const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("distributions over different supports");
  return normalized(a.cwiseProduct(b).eval());
}

template <typename Derived>
Vector<typename Derived::Scalar> uniform_like(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  return Vector<Scalar>::Constant(v.size(), Scalar(1) / static_cast<Scalar>(v.size()));
}

}  // namespace tabparse
