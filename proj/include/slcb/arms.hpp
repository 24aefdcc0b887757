#pragma once

#include "slcb/environment.hpp"
#include "slcb/mechanism.hpp"
#include "slcb/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace slcb {

/// Everything an arm may look at when choosing its report for one round.
///
/// Which fields a strategy reads is part of its contract: Truthful and
/// LinearRealizable read only the true context; Myopic, Scripted and the
/// overreporters also read theta* and the public score; EpochGradient reads
/// only the user vector (its learning signal is the epoch utility).
struct ArmView {
  int arm = 0;
  int round = 0;
  int horizon = 1;
  Eigen::Ref<const Vec> true_context;
  /// c_t for synthetic instances, nullptr otherwise.
  const Vec* user_context = nullptr;
  const Vec& theta_star;
  const ScoreFunction& public_score;
};

/// End-of-round signal delivered to every arm.
struct ArmFeedback {
  bool selected = false;
  double reward = 0.0;
};

struct Truthful {};

/// Best response to the current round's public score over the unit ball.
struct Myopic {
  int inner_iters = 50;
  double step = 1.0;
  int restarts = 8;
  std::optional<std::uint64_t> seed;
  Rng rng{};
};

/// Epoch-level learner: reports phi(c_t, y + delta_g * Delta) and, at the
/// end of each epoch, takes a one-point SPSA step on y from its utility.
struct EpochGradient {
  /// Starting features; the arm's true features when absent.
  std::optional<Vec> initial_y;
  double step = 0.1;
  double perturbation = 0.1;
  std::optional<std::uint64_t> seed;

  // state
  Vec y;
  Vec direction;  // Delta; zero during the first epoch
  std::optional<double> baseline;
  int epochs_done = 0;
  Rng rng{};
};

/// Reports a scripted scalar value along theta* on matching rounds and the
/// truth otherwise.
struct Scripted {
  struct Entry {
    enum class Match { Even, Odd, Every, Round };
    Match match = Match::Every;
    int round = 0;
    /// Target <theta*, x>; nullopt means the largest value in the ball, |theta*|.
    std::optional<double> value;
  };
  std::vector<Entry> script;
};

/// Reports R x* for a fixed orthogonal R, so <R theta*, x> = <theta*, x*>.
struct LinearRealizable {
  Mat rotation;
  /// Seed for a random orthogonal matrix when `rotation` is empty.
  std::optional<std::uint64_t> rotation_seed;
  std::uint64_t fallback_seed = 0;
};

/// With probability p reports theta*/|theta*|, else the truth.
struct RandomOverreport {
  double probability = 0.2;
  std::optional<std::uint64_t> seed;
  Rng rng{};
};

/// Inflates its reported value while the cumulative inflation over its own
/// pulls stays below fraction * 2 sqrt(n log T), the known-theta trigger
/// width. Needs its own selection feedback.
struct BudgetedOverreport {
  double budget_fraction = 0.8;

  // state
  int pulls = 0;
  double excess = 0.0;
  double pending_excess = 0.0;
};

/// Open-loop sequence of reports, one per round; truthful past its end.
struct FixedSequence {
  std::vector<Vec> reports;
};

/// One arm's reporting strategy together with its runtime state.
class Strategy {
 public:
  using Variant = std::variant<Truthful, Myopic, EpochGradient, Scripted, LinearRealizable,
                               RandomOverreport, BudgetedOverreport, FixedSequence>;

  Strategy() = default;
  template <typename S>
  Strategy(S s) : impl_(std::move(s)) {}  // NOLINT(google-explicit-constructor)

  std::string kind() const;
  const Variant& get() const { return impl_; }
  Variant& get() { return impl_; }

  /// Seeds any internal RNG that has no explicit seed.
  void reseed(std::uint64_t seed);

  /// Resets per-episode state and resolves instance-dependent parameters.
  void begin_episode(const TrueContextSequence& instance, int arm);

  /// Report for this round, always inside the unit ball.
  Vec report(const ArmView& view);

  void observe(const ArmFeedback& feedback);

  /// Epoch boundary with this epoch's pull count. No-op except for EpochGradient.
  void end_epoch(int pulls);

  /// No internal randomness within an episode, so the exact oracle can
  /// branch on it by copying.
  bool deterministic() const;

 private:
  Variant impl_ = Truthful{};
};

/// Maximises `score` over the unit ball by projected normalised-gradient
/// ascent from `restarts` starting points (the first being `warm_start`
/// when given). Returns the best iterate seen.
Vec maximize_on_unit_ball(const ScoreFunction& score, Index dim, int iters, double step,
                          int restarts, Rng& rng, const Vec* warm_start = nullptr);

/// The linear-score maximiser theta / |theta| (zero vector for theta = 0).
Vec linear_maximizer(const Vec& theta);

/// One SPSA step for an EpochGradient arm given its epoch utility u (the
/// epoch's pull count). The first call only records the baseline.
void epoch_update(EpochGradient& arm, double utility);

/// Random orthogonal matrix from the QR factorisation of a Gaussian matrix.
Mat random_orthogonal(Index dim, std::uint64_t seed);

}  // namespace slcb
