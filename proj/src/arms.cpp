#include "slcb/arms.hpp"

#include "slcb/geometry.hpp"
#include "slcb/random.hpp"

#include <cmath>
#include <limits>

namespace slcb {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Vector with <theta, x> = value, i.e. value * theta / |theta|^2, projected.
Vec along_theta(const Vec& theta, double value) {
  const double sq = theta.squaredNorm();
  return project_unit_ball(theta * (value / sq));
}

Vec truthful(const ArmView& view) { return project_unit_ball(view.true_context); }

}  // namespace

Vec linear_maximizer(const Vec& theta) {
  const double norm = theta.norm();
  if (norm == 0.0) return Vec::Zero(theta.size());
  return theta / norm;
}

Vec maximize_on_unit_ball(const ScoreFunction& score, Index dim, int iters, double step,
                          int restarts, Rng& rng, const Vec* warm_start) {
  std::vector<Vec> starts;
  if (warm_start != nullptr) starts.push_back(project_unit_ball(*warm_start));
  if (score.linear.size() == dim && score.linear.norm() > 0.0) {
    starts.push_back(linear_maximizer(score.linear));
  }
  while (static_cast<int>(starts.size()) < std::max(restarts, 1)) {
    starts.push_back(uniform_on_sphere(dim, rng));
  }

  Vec best = starts.front();
  double best_value = score(best);
  for (Vec x : starts) {
    for (int k = 0; k <= iters; ++k) {
      const double value = score(x);
      if (value > best_value) {
        best_value = value;
        best = x;
      }
      if (k == iters) break;
      const Vec g = score.gradient(x);
      const double gnorm = g.norm();
      if (gnorm == 0.0) break;
      x = project_unit_ball(x + (step / gnorm) * g);
    }
  }
  return best;
}

void epoch_update(EpochGradient& arm, double utility) {
  if (!arm.baseline) {
    arm.baseline = utility;
  } else {
    const Vec g = ((utility - *arm.baseline) / arm.perturbation) * arm.direction;
    arm.y = project_unit_ball(arm.y + arm.step * g);
    // Running mean over every completed epoch so far.
    *arm.baseline += (utility - *arm.baseline) / static_cast<double>(arm.epochs_done + 1);
  }
  ++arm.epochs_done;
  arm.direction = random_signs(arm.y.size(), arm.rng);
}

Mat random_orthogonal(Index dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat g(dim, dim);
  for (Index k = 0; k < g.size(); ++k) g.data()[k] = normal(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < dim; ++k) {
    if (r(k, k) < 0.0) q.col(k) = -q.col(k);
  }
  return q;
}

std::string Strategy::kind() const {
  return std::visit(Overloaded{
                        [](const Truthful&) { return std::string("truthful"); },
                        [](const Myopic&) { return std::string("myopic"); },
                        [](const EpochGradient&) { return std::string("epoch_gradient"); },
                        [](const Scripted&) { return std::string("scripted"); },
                        [](const LinearRealizable&) { return std::string("linear_realizable"); },
                        [](const RandomOverreport&) { return std::string("random_overreport"); },
                        [](const BudgetedOverreport&) {
                          return std::string("budgeted_overreport");
                        },
                        [](const FixedSequence&) { return std::string("fixed"); },
                    },
                    impl_);
}

void Strategy::reseed(std::uint64_t seed) {
  std::visit(Overloaded{
                 [&](Myopic& s) { s.rng.seed(s.seed.value_or(seed)); },
                 [&](EpochGradient& s) { s.rng.seed(s.seed.value_or(seed)); },
                 [&](RandomOverreport& s) { s.rng.seed(s.seed.value_or(seed)); },
                 [&](LinearRealizable& s) { s.fallback_seed = seed; },
                 [](auto&) {},
             },
             impl_);
}

void Strategy::begin_episode(const TrueContextSequence& instance, int arm) {
  std::visit(Overloaded{
                 [&](EpochGradient& s) {
                   if (s.y.size() == 0) {
                     if (s.initial_y) {
                       s.y = project_unit_ball(*s.initial_y);
                     } else if (instance.arm_features().cols() > arm) {
                       s.y = instance.arm_features().col(arm);
                     } else {
                       throw Error("epoch_gradient arm " + std::to_string(arm) +
                                   " needs initial y or a synthetic instance");
                     }
                     s.direction = Vec::Zero(s.y.size());
                   }
                   if (s.y.size() != instance.dim()) {
                     throw Error("epoch_gradient: y has wrong dimension");
                   }
                 },
                 [&](LinearRealizable& s) {
                   if (s.rotation.size() == 0) {
                     s.rotation =
                         random_orthogonal(instance.dim(), s.rotation_seed.value_or(s.fallback_seed));
                   }
                   if (s.rotation.rows() != instance.dim() || s.rotation.cols() != instance.dim()) {
                     throw Error("linear_realizable: rotation must be dim x dim");
                   }
                 },
                 [](BudgetedOverreport& s) {
                   s.pulls = 0;
                   s.excess = 0.0;
                   s.pending_excess = 0.0;
                 },
                 [](auto&) {},
             },
             impl_);
}

Vec Strategy::report(const ArmView& view) {
  return std::visit(
      Overloaded{
          [&](Truthful&) { return truthful(view); },
          [&](Myopic& s) -> Vec {
            const ScoreFunction& f = view.public_score;
            if (f.constant()) return truthful(view);
            if (f.is_linear()) {
              if (f.linear.norm() == 0.0) return truthful(view);
              return linear_maximizer(f.linear);
            }
            const Vec start = truthful(view);
            return maximize_on_unit_ball(f, start.size(), s.inner_iters, s.step, s.restarts,
                                         s.rng, &start);
          },
          [&](EpochGradient& s) -> Vec {
            if (view.user_context == nullptr) {
              throw Error("epoch_gradient needs user contexts (synthetic instance)");
            }
            return feature_map(*view.user_context, s.y + s.perturbation * s.direction);
          },
          [&](Scripted& s) -> Vec {
            const Vec& theta = view.theta_star;
            if (theta.squaredNorm() == 0.0) return truthful(view);
            for (const auto& e : s.script) {
              using M = Scripted::Entry::Match;
              const bool hit = e.match == M::Every ||
                               (e.match == M::Even && view.round % 2 == 0) ||
                               (e.match == M::Odd && view.round % 2 == 1) ||
                               (e.match == M::Round && view.round == e.round);
              if (hit) return along_theta(theta, e.value.value_or(theta.norm()));
            }
            return truthful(view);
          },
          [&](LinearRealizable& s) -> Vec {
            return project_unit_ball(s.rotation * view.true_context);
          },
          [&](RandomOverreport& s) -> Vec {
            if (canonical(s.rng) < s.probability && view.theta_star.norm() > 0.0) {
              return linear_maximizer(view.theta_star);
            }
            return truthful(view);
          },
          [&](BudgetedOverreport& s) -> Vec {
            s.pending_excess = 0.0;
            const Vec& theta = view.theta_star;
            const Vec truth = truthful(view);
            if (theta.squaredNorm() == 0.0) return truth;
            const double log_t = std::log(static_cast<double>(view.horizon));
            const double allowed =
                s.budget_fraction * 2.0 * std::sqrt((s.pulls + 1.0) * log_t) - s.excess;
            if (allowed <= 0.0) return truth;
            const Vec x = project_unit_ball(truth + (allowed / theta.squaredNorm()) * theta);
            const double gain = theta.dot(x) - theta.dot(truth);
            if (gain <= 0.0) return truth;
            s.pending_excess = gain;
            return x;
          },
          [&](FixedSequence& s) -> Vec {
            if (view.round < static_cast<int>(s.reports.size())) {
              return project_unit_ball(s.reports[view.round]);
            }
            return truthful(view);
          },
      },
      impl_);
}

void Strategy::observe(const ArmFeedback& feedback) {
  if (auto* s = std::get_if<BudgetedOverreport>(&impl_)) {
    if (feedback.selected) {
      ++s->pulls;
      s->excess += s->pending_excess;
    }
    s->pending_excess = 0.0;
  }
}

void Strategy::end_epoch(int pulls) {
  if (auto* s = std::get_if<EpochGradient>(&impl_)) {
    epoch_update(*s, static_cast<double>(pulls));
  }
}

bool Strategy::deterministic() const {
  return !std::holds_alternative<RandomOverreport>(impl_);
}

}  // namespace slcb
