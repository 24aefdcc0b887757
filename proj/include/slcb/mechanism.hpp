#pragma once

#include "slcb/estimator.hpp"
#include "slcb/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace slcb {

enum class MechanismKind { GGTM, OptGTM, LinUCB, GreedyKnownTheta, Uniform, DeterministicIC };

std::string to_string(MechanismKind kind);
MechanismKind parse_mechanism_kind(const std::string& name);

/// Whether the mechanism is handed theta* up front.
bool knows_theta(MechanismKind kind);

/// How the confidence radius rho turns into an exploration bonus.
enum class BonusForm {
  Radius,      // rho * |x|_{V^{-1}}
  SqrtRadius,  // sqrt(rho) * |x|_{V^{-1}}
};

std::string to_string(BonusForm form);
BonusForm parse_bonus_form(const std::string& name);

struct MechanismConfig {
  MechanismKind kind = MechanismKind::OptGTM;
  /// Display name; defaults to the kind's name.
  std::string label;
  double lambda = 1.0;
  /// Defaults to 1 / T^2.
  std::optional<double> delta;
  /// Overrides the environment's S.
  std::optional<double> s_bound;
  BonusForm bonus = BonusForm::SqrtRadius;
  /// Select with probability proportional to exp(T * score) instead of argmax.
  bool smoothing = false;
  /// Tolerance for the equality test of the deterministic mechanism.
  double ic_tolerance = 1e-9;
  /// Overrides the seed the caller derives for tie-breaking.
  std::optional<std::uint64_t> tie_break_seed;

  std::string name() const { return label.empty() ? to_string(kind) : label; }
};

/// What a mechanism needs to know about the game it is deployed in.
struct GameShape {
  int num_arms = 0;
  int dim = 0;
  int horizon = 0;
  /// Only read by mechanisms for which knows_theta() holds.
  Vec theta_star;
  double s_bound = 1.0;
};

/// Per-arm public score x -> <linear, x> + width * sqrt(x^T metric x).
/// Strategic arms optimise against it; the mechanism ranks reports with it.
struct ScoreFunction {
  Vec linear;
  Mat metric;
  double width = 0.0;

  /// True when every report scores the same (uniform selection).
  bool constant() const { return linear.size() == 0 && metric.size() == 0; }
  bool is_linear() const { return metric.size() == 0 || width == 0.0; }

  double operator()(const Vec& x) const;
  Vec gradient(const Vec& x) const;
};

/// (arm, probability) pairs with positive mass.
using SelectionDistribution = std::vector<std::pair<int, double>>;

/// Learner side of the protocol: one round is select() followed, when an
/// arm was returned, by record() for that arm.
///
/// Value type: copies branch the full state including the tie-break RNG,
/// which the exact utility oracle relies on.
class Mechanism {
 public:
  static constexpr double kTieTolerance = 1e-12;

  Mechanism(MechanismConfig config, GameShape shape, std::uint64_t seed);

  const MechanismConfig& config() const { return config_; }
  MechanismKind kind() const { return config_.kind; }
  int num_arms() const { return shape_.num_arms; }
  int horizon() const { return shape_.horizon; }
  /// Index of the round in progress (0-based).
  int round() const { return round_; }

  /// Score function arm `arm` is ranked by this round.
  ScoreFunction public_score(int arm) const;

  /// Scores of the given (already projected) reports; -inf for inactive arms.
  std::vector<double> scores(const std::vector<Vec>& reports) const;

  /// Distribution over the selected arm; empty iff no arm is active.
  SelectionDistribution selection_distribution(const std::vector<Vec>& reports) const;

  /// Projects reports into the unit ball, draws the tie-break variable and
  /// returns the selected arm (or none when the active set is empty).
  std::optional<int> select(const std::vector<Vec>& reports);

  /// select() with the tie-break variable supplied; used for replay.
  std::optional<int> select_with_draw(const std::vector<Vec>& reports, double draw);

  /// Selects `arm`, which must carry positive probability. Used to branch
  /// over every possible selection when enumerating outcomes.
  std::optional<int> select_arm(const std::vector<Vec>& reports, int arm);

  /// Accumulates the observation and evaluates the trigger. Returns true
  /// when `arm` is eliminated this round.
  bool record(int arm, const Vec& report, double reward);

  /// Tie-break variable consumed by the most recent select().
  double last_draw() const { return last_draw_; }
  /// Scores computed by the most recent select().
  const std::vector<double>& last_scores() const { return last_scores_; }
  /// Whether the most recent select() had to project any report.
  bool last_projected() const { return last_projected_; }

  bool is_active(int arm) const { return active_.at(arm); }
  int active_count() const;
  std::vector<int> active_set() const;
  /// Round in which the arm was eliminated.
  std::optional<int> eliminated_at(int arm) const { return eliminated_at_.at(arm); }

  int pulls(int arm) const { return static_cast<int>(pulls_.at(arm)); }
  /// Sum of <theta*, x> over the arm's selection rounds.
  double reported_sum(int arm) const { return reported_sum_.at(arm); }
  /// Sum of pre-update LCB values over the arm's selection rounds.
  double pessimistic_sum(int arm) const { return pessimistic_sum_.at(arm); }
  /// Sum of observed rewards.
  double observed_sum(int arm) const { return observed_sum_.at(arm); }

  /// 2 sqrt(n log T): the Hoeffding width on a sum of n rewards.
  double reward_width(int pulls) const;

  /// Per-arm estimator (OptGTM) or the shared one (LinUCB).
  const ArmEstimator<double>& estimator(int arm) const;

  /// The bonus width for an estimator under this mechanism's BonusForm.
  double bonus_width(const ArmEstimator<double>& est) const;

 private:
  void check_reports(const std::vector<Vec>& reports) const;
  bool eligible(int arm) const;
  bool uniform_phase() const;
  void eliminate(int arm);

  MechanismConfig config_;
  GameShape shape_;
  double delta_;
  double s_bound_;
  double log_horizon_;
  Rng rng_;
  int round_ = 0;
  std::optional<int> awaiting_;
  double last_draw_ = 0.0;
  bool last_projected_ = false;
  std::vector<double> last_scores_;
  std::vector<bool> active_;
  std::vector<std::optional<int>> eliminated_at_;
  std::vector<std::int64_t> pulls_;
  std::vector<double> reported_sum_;
  std::vector<double> pessimistic_sum_;
  std::vector<double> observed_sum_;
  std::vector<ArmEstimator<double>> estimators_;
};

}  // namespace slcb
