#include "slcb/estimator.hpp"
#include "slcb/random.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace slcb;

namespace {

// From-scratch ridge solution (lambda I + X^T X)^{-1} X^T r.
Vec ridge_solve(const std::vector<Vec>& xs, const std::vector<double>& rs, double lambda) {
  const Index d = xs.front().size();
  Mat v = lambda * Mat::Identity(d, d);
  Vec b = Vec::Zero(d);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    v += xs[k] * xs[k].transpose();
    b += rs[k] * xs[k];
  }
  return v.ldlt().solve(b);
}

}  // namespace

TEST_CASE("fresh estimator scores +-width at a unit vector") {
  ArmEstimator<double> est(2, 1.0, 0.5, 1.0);
  const Vec x = Vec::Unit(2, 0);
  CHECK(est.theta_hat().isZero());
  CHECK(est.score(x, ScoreMode::Optimistic, 1.0) == doctest::Approx(1.0));
  CHECK(est.score(x, ScoreMode::Pessimistic, 1.0) == doctest::Approx(-1.0));
}

TEST_CASE("one and two updates against the closed form") {
  ArmEstimator<double> est(2, 1.0, 0.5, 1.0);
  const Vec x = Vec::Unit(2, 0);
  est.update(x, 1.0);
  Mat v(2, 2);
  v << 2, 0, 0, 1;
  CHECK(est.gram().isApprox(v));
  CHECK(est.theta_hat()(0) == doctest::Approx(0.5));
  CHECK(est.theta_hat()(1) == doctest::Approx(0.0));
  CHECK(est.mahalanobis_norm(x) == doctest::Approx(1.0 / std::sqrt(2.0)));
  const double w = 0.7;
  CHECK(est.score(x, ScoreMode::Optimistic, w) == doctest::Approx(0.5 + w / std::sqrt(2.0)));
  CHECK(est.score(x, ScoreMode::Pessimistic, w) == doctest::Approx(0.5 - w / std::sqrt(2.0)));

  est.update(x, 1.0);
  CHECK(est.theta_hat()(0) == doctest::Approx(2.0 / 3.0));
  CHECK(est.count() == 2);
}

TEST_CASE("confidence radius formula") {
  // d = 2, n = 0, lambda = 1, delta = 1e-4, S = 1: sqrt(2 ln 1e4) + 1.
  CHECK(confidence_radius<double>(2, 0, 1.0, 1e-4, 1.0) ==
        doctest::Approx(std::sqrt(2.0 * std::log(1e4)) + 1.0));
  CHECK(confidence_radius<double>(2, 0, 1.0, 1e-4, 1.0) == doctest::Approx(5.29193).epsilon(1e-5));
  // delta = 1 and n = 0 leave only the prior term sqrt(lambda) S.
  CHECK(confidence_radius<double>(3, 0, 4.0, 1.0, 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(confidence_radius<double>(2, 0, 1.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(confidence_radius<double>(2, 0, 1.0, 1.5, 1.0), Error);
  CHECK_THROWS_AS(confidence_radius<double>(2, 0, 0.0, 0.1, 1.0), Error);
}

TEST_CASE("radius is nondecreasing in the count") {
  double prev = 0.0;
  for (int n = 0; n < 5000; n += 37) {
    const double r = confidence_radius<double>(5, n, 1.0, 1e-8, 1.0);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("incremental estimate matches a from-scratch ridge solve past refactor points") {
  Rng rng(derive_seed(11, Stream::Run));
  for (int trial = 0; trial < 5; ++trial) {
    const Index d = 1 + static_cast<Index>(rng() % 8);
    const double lambda = 0.1 + canonical(rng);
    ArmEstimator<double> est(d, lambda, 0.01, 1.0);
    std::vector<Vec> xs;
    std::vector<double> rs;
    for (int n = 0; n < 1100; ++n) {
      xs.push_back(uniform_on_sphere(d, rng) * canonical(rng));
      rs.push_back(2.0 * canonical(rng) - 1.0);
      est.update(xs.back(), rs.back());
    }
    const Vec ref = ridge_solve(xs, rs, lambda);
    CHECK((est.theta_hat() - ref).norm() <= 1e-9 * std::max(1.0, ref.norm()));
    Mat v = lambda * Mat::Identity(d, d);
    for (const Vec& x : xs) v += x * x.transpose();
    CHECK((est.gram_inverse() - v.inverse()).norm() <= 1e-9 * v.inverse().norm());
  }
}

TEST_CASE("optimistic is at least pessimistic, with equality only at zero") {
  Rng rng(3);
  ArmEstimator<double> est(4, 1.0, 0.1, 1.0);
  for (int n = 0; n < 50; ++n) {
    const Vec x = uniform_on_sphere(4, rng);
    CHECK(est.score(x, ScoreMode::Optimistic) > est.score(x, ScoreMode::Pessimistic));
    est.update(x, canonical(rng));
  }
  const Vec zero = Vec::Zero(4);
  CHECK(est.score(zero, ScoreMode::Optimistic) == est.score(zero, ScoreMode::Pessimistic));
}

TEST_CASE("rejects bad updates") {
  ArmEstimator<double> est(2, 1.0, 0.1, 1.0);
  CHECK_THROWS_AS(est.update(Vec::Zero(3), 1.0), Error);
  CHECK_THROWS_AS(est.update(Vec::Unit(2, 0), std::numeric_limits<double>::quiet_NaN()), Error);
  Vec bad = Vec::Zero(2);
  bad(1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(est.update(bad, 0.0), Error);
  CHECK(est.count() == 0);
}

TEST_CASE("works for long double scalars") {
  ArmEstimator<long double> est(2, 1.0L, 0.5L, 1.0L);
  Eigen::Matrix<long double, Eigen::Dynamic, 1> x(2);
  x << 1.0L, 0.0L;
  est.update(x, 1.0L);
  CHECK(static_cast<double>(est.theta_hat()(0)) == doctest::Approx(0.5));
  ArmEstimator<double> plain(2, 1.0, 0.5, 1.0);
  plain.update(x.cast<double>(), 1.0);
  CHECK(static_cast<double>(est.radius()) == doctest::Approx(plain.radius()));
}
