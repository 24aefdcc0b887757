#include "slcb/mechanism.hpp"

#include "slcb/geometry.hpp"
#include "slcb/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slcb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::GGTM: return "ggtm";
    case MechanismKind::OptGTM: return "optgtm";
    case MechanismKind::LinUCB: return "linucb";
    case MechanismKind::GreedyKnownTheta: return "greedy";
    case MechanismKind::Uniform: return "uniform";
    case MechanismKind::DeterministicIC: return "deterministic_ic";
  }
  return "unknown";
}

MechanismKind parse_mechanism_kind(const std::string& name) {
  for (auto kind : {MechanismKind::GGTM, MechanismKind::OptGTM, MechanismKind::LinUCB,
                    MechanismKind::GreedyKnownTheta, MechanismKind::Uniform,
                    MechanismKind::DeterministicIC}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("mechanism.kind", "unknown mechanism '" + name + "'");
}

bool knows_theta(MechanismKind kind) {
  return kind == MechanismKind::GGTM || kind == MechanismKind::GreedyKnownTheta ||
         kind == MechanismKind::DeterministicIC;
}

std::string to_string(BonusForm form) {
  return form == BonusForm::Radius ? "radius" : "sqrt_radius";
}

BonusForm parse_bonus_form(const std::string& name) {
  if (name == "radius") return BonusForm::Radius;
  if (name == "sqrt_radius") return BonusForm::SqrtRadius;
  throw ValidationError("mechanism.bonus", "unknown bonus form '" + name + "'");
}

double ScoreFunction::operator()(const Vec& x) const {
  if (constant()) return 0.0;
  double value = linear.size() ? linear.dot(x) : 0.0;
  if (!is_linear()) {
    const double q = x.dot(metric * x);
    value += width * std::sqrt(std::max(q, 0.0));
  }
  return value;
}

Vec ScoreFunction::gradient(const Vec& x) const {
  Vec g = linear.size() ? linear : Vec::Zero(x.size());
  if (!is_linear()) {
    const Vec mx = metric * x;
    const double q = std::sqrt(std::max(x.dot(mx), 0.0));
    if (q > 0.0) g += (width / q) * mx;
  }
  return g;
}

Mechanism::Mechanism(MechanismConfig config, GameShape shape, std::uint64_t seed)
    : config_(std::move(config)),
      shape_(std::move(shape)),
      rng_(config_.tie_break_seed.value_or(seed)) {
  const int K = shape_.num_arms;
  const int T = shape_.horizon;
  if (K <= 0) throw ValidationError("num_arms", "must be positive");
  if (T <= 0) throw ValidationError("horizon", "must be positive");
  if (shape_.dim <= 0) throw ValidationError("dim", "must be positive");
  if (knows_theta(config_.kind) && shape_.theta_star.size() != shape_.dim) {
    throw ValidationError("theta_star", to_string(config_.kind) + " needs theta*");
  }
  if (!(config_.lambda > 0.0)) throw ValidationError("mechanism.lambda", "must be positive");
  delta_ = config_.delta.value_or(1.0 / (static_cast<double>(T) * T));
  if (!(delta_ > 0.0 && delta_ <= 1.0)) {
    throw ValidationError("mechanism.delta", "must lie in (0, 1]");
  }
  s_bound_ = config_.s_bound.value_or(shape_.s_bound);
  log_horizon_ = std::log(static_cast<double>(T));

  active_.assign(K, true);
  eliminated_at_.assign(K, std::nullopt);
  pulls_.assign(K, 0);
  reported_sum_.assign(K, 0.0);
  pessimistic_sum_.assign(K, 0.0);
  observed_sum_.assign(K, 0.0);
  if (config_.kind == MechanismKind::OptGTM) {
    estimators_.assign(K, ArmEstimator<double>(shape_.dim, config_.lambda, delta_, s_bound_));
  } else if (config_.kind == MechanismKind::LinUCB) {
    estimators_.assign(1, ArmEstimator<double>(shape_.dim, config_.lambda, delta_, s_bound_));
  }
}

double Mechanism::reward_width(int pulls) const {
  return 2.0 * std::sqrt(static_cast<double>(pulls) * log_horizon_);
}

const ArmEstimator<double>& Mechanism::estimator(int arm) const {
  if (config_.kind == MechanismKind::OptGTM) return estimators_.at(arm);
  if (config_.kind == MechanismKind::LinUCB) return estimators_.front();
  throw Error(to_string(config_.kind) + " keeps no estimator");
}

double Mechanism::bonus_width(const ArmEstimator<double>& est) const {
  const double rho = est.radius();
  return config_.bonus == BonusForm::Radius ? rho : std::sqrt(rho);
}

bool Mechanism::uniform_phase() const {
  // Deterministic mechanism: greedy while t < T - (K + 1), then uniform over
  // the active set for the final K + 1 rounds.
  return round_ >= shape_.horizon - (shape_.num_arms + 1);
}

bool Mechanism::eligible(int arm) const {
  switch (config_.kind) {
    case MechanismKind::GGTM:
    case MechanismKind::OptGTM:
    case MechanismKind::DeterministicIC: return active_[arm];
    default: return true;
  }
}

int Mechanism::active_count() const {
  return static_cast<int>(std::count(active_.begin(), active_.end(), true));
}

std::vector<int> Mechanism::active_set() const {
  std::vector<int> out;
  for (int i = 0; i < num_arms(); ++i) {
    if (active_[i]) out.push_back(i);
  }
  return out;
}

ScoreFunction Mechanism::public_score(int arm) const {
  ScoreFunction f;
  switch (config_.kind) {
    case MechanismKind::GGTM:
    case MechanismKind::GreedyKnownTheta: f.linear = shape_.theta_star; break;
    case MechanismKind::DeterministicIC:
      if (!uniform_phase()) f.linear = shape_.theta_star;
      break;
    case MechanismKind::Uniform: break;
    case MechanismKind::OptGTM:
    case MechanismKind::LinUCB: {
      const auto& est = estimator(arm);
      f.linear = est.theta_hat();
      f.metric = est.gram_inverse();
      f.width = bonus_width(est);
      break;
    }
  }
  return f;
}

void Mechanism::check_reports(const std::vector<Vec>& reports) const {
  if (static_cast<int>(reports.size()) != num_arms()) {
    throw Error("Mechanism: expected " + std::to_string(num_arms()) + " reports, got " +
                std::to_string(reports.size()));
  }
  for (const Vec& x : reports) {
    if (x.size() != shape_.dim) throw Error("Mechanism: report has wrong dimension");
    if (!x.allFinite()) throw Error("Mechanism: non-finite report");
  }
}

std::vector<double> Mechanism::scores(const std::vector<Vec>& reports) const {
  check_reports(reports);
  std::vector<double> out(num_arms(), kNegInf);
  for (int i = 0; i < num_arms(); ++i) {
    if (!eligible(i)) continue;
    const Vec& x = reports[i];
    switch (config_.kind) {
      case MechanismKind::GGTM:
      case MechanismKind::GreedyKnownTheta:
      case MechanismKind::DeterministicIC: out[i] = shape_.theta_star.dot(x); break;
      case MechanismKind::Uniform: out[i] = 0.0; break;
      case MechanismKind::OptGTM:
      case MechanismKind::LinUCB: {
        const auto& est = estimator(i);
        out[i] = est.score(x, ScoreMode::Optimistic, bonus_width(est));
        break;
      }
    }
  }
  return out;
}

SelectionDistribution Mechanism::selection_distribution(const std::vector<Vec>& reports) const {
  const std::vector<double> s = scores(reports);
  std::vector<int> pool;
  for (int i = 0; i < num_arms(); ++i) {
    if (s[i] != kNegInf) pool.push_back(i);
  }
  SelectionDistribution dist;
  if (pool.empty()) return dist;

  const bool ignores_scores = config_.kind == MechanismKind::Uniform ||
                              (config_.kind == MechanismKind::DeterministicIC && uniform_phase());
  if (ignores_scores) {
    for (int i : pool) dist.emplace_back(i, 1.0 / pool.size());
    return dist;
  }

  double best = kNegInf;
  for (int i : pool) best = std::max(best, s[i]);

  if (config_.smoothing) {
    std::vector<double> w;
    double total = 0.0;
    for (int i : pool) {
      w.push_back(std::exp(static_cast<double>(horizon()) * (s[i] - best)));
      total += w.back();
    }
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (w[k] > 0.0) dist.emplace_back(pool[k], w[k] / total);
    }
    return dist;
  }

  const double tol = kTieTolerance * std::max(1.0, std::abs(best));
  std::vector<int> tied;
  for (int i : pool) {
    if (s[i] >= best - tol) tied.push_back(i);
  }
  for (int i : tied) dist.emplace_back(i, 1.0 / tied.size());
  return dist;
}

std::optional<int> Mechanism::select(const std::vector<Vec>& reports) {
  return select_with_draw(reports, canonical(rng_));
}

std::optional<int> Mechanism::select_with_draw(const std::vector<Vec>& reports_in,
                                               double draw) {
  if (awaiting_) throw Error("Mechanism::select: previous selection was not recorded");
  if (round_ >= horizon()) throw Error("Mechanism::select: horizon exhausted");
  check_reports(reports_in);
  std::vector<Vec> reports;
  reports.reserve(reports_in.size());
  last_projected_ = false;
  for (const Vec& x : reports_in) {
    reports.push_back(project_unit_ball(x));
    last_projected_ = last_projected_ || x.norm() > 1.0;
  }
  last_draw_ = draw;
  last_scores_ = scores(reports);
  const SelectionDistribution dist = selection_distribution(reports);
  if (dist.empty()) {
    ++round_;
    return std::nullopt;
  }
  double acc = 0.0;
  int chosen = dist.back().first;
  for (const auto& [arm, p] : dist) {
    acc += p;
    if (draw < acc) {
      chosen = arm;
      break;
    }
  }
  awaiting_ = chosen;
  return chosen;
}

std::optional<int> Mechanism::select_arm(const std::vector<Vec>& reports, int arm) {
  const SelectionDistribution dist = selection_distribution(reports);
  double lower = 0.0;
  for (const auto& [candidate, p] : dist) {
    if (candidate == arm) return select_with_draw(reports, lower + 0.5 * p);
    lower += p;
  }
  throw Error("Mechanism::select_arm: arm " + std::to_string(arm) + " cannot be selected");
}

void Mechanism::eliminate(int arm) {
  active_[arm] = false;
  eliminated_at_[arm] = round_;
}

bool Mechanism::record(int arm, const Vec& report_in, double reward) {
  if (!awaiting_ || *awaiting_ != arm) {
    throw Error("Mechanism::record: arm " + std::to_string(arm) +
                " was not selected this round");
  }
  if (report_in.size() != shape_.dim || !report_in.allFinite() || !std::isfinite(reward)) {
    throw Error("Mechanism::record: invalid report or reward");
  }
  const Vec x = project_unit_ball(report_in);
  awaiting_.reset();
  ++pulls_[arm];
  observed_sum_[arm] += reward;
  const double ucb_observed = observed_sum_[arm] + reward_width(static_cast<int>(pulls_[arm]));

  bool eliminated = false;
  switch (config_.kind) {
    case MechanismKind::GGTM:
      reported_sum_[arm] += shape_.theta_star.dot(x);
      eliminated = reported_sum_[arm] > ucb_observed;
      break;
    case MechanismKind::OptGTM: {
      auto& est = estimators_[arm];
      // LCB with the estimator as it stood before this round's observation.
      pessimistic_sum_[arm] += est.score(x, ScoreMode::Pessimistic, bonus_width(est));
      est.update(x, reward);
      eliminated = pessimistic_sum_[arm] > ucb_observed;
      break;
    }
    case MechanismKind::LinUCB: estimators_.front().update(x, reward); break;
    case MechanismKind::DeterministicIC:
      reported_sum_[arm] += shape_.theta_star.dot(x);
      eliminated = std::abs(shape_.theta_star.dot(x) - reward) > config_.ic_tolerance;
      break;
    case MechanismKind::GreedyKnownTheta:
    case MechanismKind::Uniform: break;
  }
  if (eliminated) eliminate(arm);
  ++round_;
  return eliminated;
}

}  // namespace slcb
