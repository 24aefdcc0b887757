#pragma once

#include "slcb/types.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace slcb {

enum class ScoreMode { Optimistic, Pessimistic };

/// rho = sqrt(d * log((1 + n / lambda) / delta)) + sqrt(lambda) * S.
///
/// delta = 1 is accepted so the log term can be switched off; anything
/// outside (0, 1] is rejected.
template <typename Scalar = double>
Scalar confidence_radius(Index dim, std::int64_t count, Scalar lambda, Scalar delta,
                         Scalar s_bound) {
  if (!(delta > Scalar(0) && delta <= Scalar(1))) {
    throw Error("confidence_radius: delta must lie in (0, 1], got " + std::to_string(delta));
  }
  if (!(lambda > Scalar(0))) throw Error("confidence_radius: lambda must be positive");
  using std::log;
  using std::sqrt;
  const Scalar ratio = (Scalar(1) + Scalar(count) / lambda) / delta;
  return sqrt(Scalar(dim) * log(ratio)) + sqrt(lambda) * s_bound;
}

/// Online ridge regression for one arm (or one shared model).
///
/// Keeps V = lambda I + sum x x^T, b = sum x r and the inverse of V. The
/// inverse follows Sherman-Morrison rank-one updates and is rebuilt from V
/// by an LDLT solve every `kRefactorInterval` updates.
template <typename Scalar = double>
class ArmEstimator {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  static constexpr std::int64_t kRefactorInterval = 512;

  ArmEstimator(Index dim, Scalar lambda, Scalar delta, Scalar s_bound)
      : lambda_(lambda), delta_(delta), s_bound_(s_bound) {
    if (dim <= 0) throw Error("ArmEstimator: dimension must be positive");
    if (!(lambda > Scalar(0))) throw Error("ArmEstimator: lambda must be positive");
    if (!(delta > Scalar(0) && delta <= Scalar(1))) {
      throw Error("ArmEstimator: delta must lie in (0, 1]");
    }
    gram_ = lambda * Matrix::Identity(dim, dim);
    gram_inv_ = Matrix::Identity(dim, dim) / lambda;
    moment_ = Vector::Zero(dim);
    theta_ = Vector::Zero(dim);
  }

  template <typename Derived>
  void update(const Eigen::MatrixBase<Derived>& x, Scalar reward) {
    if (x.size() != dim()) throw Error("ArmEstimator::update: dimension mismatch");
    if (!x.allFinite() || !std::isfinite(reward)) {
      throw Error("ArmEstimator::update: non-finite observation");
    }
    const Vector v = x.template cast<Scalar>();
    gram_.noalias() += v * v.transpose();
    moment_.noalias() += reward * v;
    ++count_;
    if (count_ % kRefactorInterval == 0) {
      refactor();
    } else {
      const Vector w = gram_inv_ * v;
      gram_inv_.noalias() -= (w * w.transpose()) / (Scalar(1) + v.dot(w));
      gram_inv_ = Scalar(0.5) * (gram_inv_ + gram_inv_.transpose()).eval();
    }
    theta_.noalias() = gram_inv_ * moment_;
  }

  /// sqrt(x^T V^{-1} x).
  template <typename Derived>
  Scalar mahalanobis_norm(const Eigen::MatrixBase<Derived>& x) const {
    using std::sqrt;
    const Scalar q = x.dot(gram_inv_ * x);
    return q > Scalar(0) ? sqrt(q) : Scalar(0);
  }

  Scalar radius() const {
    return confidence_radius<Scalar>(dim(), count_, lambda_, delta_, s_bound_);
  }

  /// <theta_hat, x> +/- width * |x|_{V^{-1}}.
  template <typename Derived>
  Scalar score(const Eigen::MatrixBase<Derived>& x, ScoreMode mode, Scalar width) const {
    if (x.size() != dim()) throw Error("ArmEstimator::score: dimension mismatch");
    if (!x.allFinite()) throw Error("ArmEstimator::score: non-finite context");
    const Scalar bonus = width * mahalanobis_norm(x);
    const Scalar mean = theta_.dot(x);
    return mode == ScoreMode::Optimistic ? mean + bonus : mean - bonus;
  }

  template <typename Derived>
  Scalar score(const Eigen::MatrixBase<Derived>& x, ScoreMode mode) const {
    return score(x, mode, radius());
  }

  Index dim() const { return theta_.size(); }
  std::int64_t count() const { return count_; }
  Scalar lambda() const { return lambda_; }
  Scalar delta() const { return delta_; }
  Scalar s_bound() const { return s_bound_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& gram_inverse() const { return gram_inv_; }
  const Vector& moment() const { return moment_; }
  const Vector& theta_hat() const { return theta_; }

 private:
  void refactor() {
    const Index d = dim();
    gram_inv_ = gram_.ldlt().solve(Matrix::Identity(d, d));
  }

  Scalar lambda_;
  Scalar delta_;
  Scalar s_bound_;
  std::int64_t count_ = 0;
  Matrix gram_;
  Matrix gram_inv_;
  Vector moment_;
  Vector theta_;
};

}  // namespace slcb
