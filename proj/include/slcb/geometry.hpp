#pragma once

#include "slcb/types.hpp"

#include <algorithm>
#include <cmath>

namespace slcb {

template <typename Derived>
using PlainVector = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;

/// Radial projection onto the closed unit ball.
template <typename Derived>
PlainVector<Derived> project_unit_ball(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = x.norm();
  if (norm > Scalar(1)) return x / norm;
  return x;
}

template <typename Derived>
bool in_unit_ball(const Eigen::MatrixBase<Derived>& x,
                  typename Derived::Scalar tol = typename Derived::Scalar(1e-12)) {
  return x.norm() <= typename Derived::Scalar(1) + tol;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

/// phi(c, y) = (c .* y) / max(1, |c .* y|). Maps user features and arm
/// features to an arm context inside the unit ball.
template <typename DerivedC, typename DerivedY>
PlainVector<DerivedC> feature_map(const Eigen::MatrixBase<DerivedC>& c,
                                  const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedC::Scalar;
  if (c.size() != y.size()) {
    throw Error("feature_map: dimension mismatch (" + std::to_string(c.size()) + " vs " +
                std::to_string(y.size()) + ")");
  }
  PlainVector<DerivedC> x = c.cwiseProduct(y);
  const Scalar norm = x.norm();
  return x / std::max(Scalar(1), norm);
}

/// Angle between two nonzero vectors, in radians.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar angle_between(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar cosine = a.dot(b) / (a.norm() * b.norm());
  // atan2 keeps precision for nearly parallel vectors where acos does not.
  const Scalar sine = (a.normalized() - b.normalized() * cosine).norm();
  return std::atan2(sine, std::clamp(cosine, Scalar(-1), Scalar(1)));
}

}  // namespace slcb
