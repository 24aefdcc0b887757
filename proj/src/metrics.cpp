#include "slcb/metrics.hpp"

#include "slcb/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace slcb {

namespace {

std::string hex_fingerprint(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_arm(int arm, std::size_t num_arms) {
  if (arm < 0 || static_cast<std::size_t>(arm) >= num_arms) {
    throw Error("deviation: arm " + std::to_string(arm) + " out of range");
  }
}

DeviationReport assemble(int arm, DeviationMethod method, int num_runs,
                         const std::vector<double>& baseline,
                         const std::vector<std::vector<double>>& deviated,
                         const std::vector<Deviation>& menu) {
  DeviationReport rep;
  rep.arm = arm;
  rep.method = method;
  rep.num_runs = num_runs;
  const Summary base = summarize(baseline);
  rep.baseline_utility = base.mean;
  rep.baseline_std_error = base.std_error;
  for (std::size_t j = 0; j < menu.size(); ++j) {
    std::vector<double> diff(baseline.size());
    for (std::size_t r = 0; r < baseline.size(); ++r) diff[r] = deviated[j][r] - baseline[r];
    const Summary u = summarize(deviated[j]);
    const Summary g = summarize(diff);
    rep.deviations.push_back({menu[j].label, u.mean, u.std_error, g.mean, g.std_error});
    if (g.mean > rep.gain) {
      rep.gain = g.mean;
      rep.gain_std_error = g.std_error;
      rep.best = static_cast<int>(j);
    }
  }
  return rep;
}

struct OracleState {
  Mechanism mech;
  std::vector<Strategy> arms;
  std::vector<int> pulls;
};

class Enumerator {
 public:
  Enumerator(const TrueContextSequence& inst, std::vector<double>& expected)
      : inst_(inst), expected_(expected) {}

  void run(OracleState state, int t, double prob) {
    if (++branches_ > kOracleMaxBranches) {
      throw Error("exact_utility_oracle: more than " + std::to_string(kOracleMaxBranches) +
                  " branches");
    }
    if (t == inst_.horizon()) {
      for (std::size_t i = 0; i < state.pulls.size(); ++i) expected_[i] += prob * state.pulls[i];
      return;
    }
    const int K = inst_.num_arms();
    const Vec* user = inst_.has_users() ? &inst_.users()[t] : nullptr;
    std::vector<Vec> reports(K);
    for (int i = 0; i < K; ++i) {
      const ScoreFunction score = state.mech.public_score(i);
      const ArmView view{i, t, inst_.horizon(), inst_.context(t, i), user, inst_.theta_star(),
                         score};
      reports[i] = state.arms[i].report(view);
    }
    const SelectionDistribution dist = state.mech.selection_distribution(reports);
    if (dist.empty()) {
      state.mech.select_with_draw(reports, 0.0);
      for (auto& a : state.arms) a.observe(ArmFeedback{});
      run(std::move(state), t + 1, prob);
      return;
    }
    for (const auto& [a, p] : dist) {
      const double mean = inst_.value(t, a);
      std::vector<std::pair<double, double>> outcomes;  // (reward, probability)
      if (inst_.noise().kind == NoiseModel::Kind::Bernoulli) {
        if (mean > 0.0) outcomes.emplace_back(1.0, mean);
        if (mean < 1.0) outcomes.emplace_back(0.0, 1.0 - mean);
      } else {
        outcomes.emplace_back(mean, 1.0);
      }
      for (const auto& [reward, q] : outcomes) {
        OracleState next = state;
        next.mech.select_arm(reports, a);
        next.mech.record(a, reports[a], reward);
        ++next.pulls[a];
        for (int i = 0; i < K; ++i) next.arms[i].observe(ArmFeedback{i == a, i == a ? reward : 0.0});
        run(std::move(next), t + 1, prob * p * q);
      }
    }
  }

 private:
  const TrueContextSequence& inst_;
  std::vector<double>& expected_;
  long branches_ = 0;
};

}  // namespace

RegretSeries strategic_regret(const SimulationLog& log, const TrueContextSequence& instance) {
  if (log.fingerprint != hex_fingerprint(instance.fingerprint())) {
    throw Error("strategic_regret: log was produced on a different instance");
  }
  if (log.horizon() != instance.horizon()) {
    throw Error("strategic_regret: log horizon does not match the instance");
  }
  RegretSeries out;
  const int T = instance.horizon();
  out.instantaneous.resize(T);
  out.cumulative.resize(T);
  double running = 0.0;
  for (int t = 0; t < T; ++t) {
    const RoundRecord& rec = log.rounds[t];
    const double best = instance.value(t, instance.optimal_arm(t));
    const double got = rec.arm >= 0 ? instance.value(t, rec.arm) : 0.0;
    out.instantaneous[t] = best - got;
    running += out.instantaneous[t];
    out.cumulative[t] = running;
  }
  out.total = running;
  return out;
}

RegretSeries strategic_regret(const SimulationLog& log) {
  if (!log.instance) throw Error("strategic_regret: log carries no instance");
  return strategic_regret(log, *log.instance);
}

double manipulation_mass(const SimulationLog& log) {
  double total = 0.0;
  for (const RoundRecord& rec : log.rounds) total += rec.manipulation;
  return total;
}

std::string to_string(DeviationMethod method) {
  return method == DeviationMethod::MonteCarlo ? "monte_carlo" : "exact_oracle";
}

DeviationReport deviation_gain(const EnvironmentSpec& env, const MechanismConfig& mechanism,
                               const std::vector<Strategy>& profile, int arm,
                               const std::vector<Deviation>& menu, int num_runs,
                               std::uint64_t seed, int parallelism) {
  if (num_runs < 2) throw Error("deviation_gain: need at least 2 runs");
  check_arm(arm, profile.size());
  RunOptions options;
  options.keep_reports = false;

  // Per run: baseline pulls followed by each deviation's pulls, all on the same seeds.
  const std::function<std::vector<double>(std::size_t)> job = [&](std::size_t r) {
    const std::uint64_t master = derive_seed(seed, Stream::Run, r);
    std::vector<double> pulls;
    pulls.reserve(menu.size() + 1);
    auto logs = run_epochs(env, mechanism, profile, 1, master, options);
    pulls.push_back(logs.front().arms[arm].pulls);
    for (const Deviation& dev : menu) {
      std::vector<Strategy> deviated = profile;
      deviated[arm] = dev.strategy;
      logs = run_epochs(env, mechanism, deviated, 1, master, options);
      pulls.push_back(logs.front().arms[arm].pulls);
    }
    return pulls;
  };
  const auto results = run_batch<std::vector<double>>(
      static_cast<std::size_t>(num_runs), parallelism, job,
      [](std::size_t r) { return "deviation run " + std::to_string(r); });

  std::vector<double> baseline(num_runs);
  std::vector<std::vector<double>> deviated(menu.size(), std::vector<double>(num_runs));
  for (int r = 0; r < num_runs; ++r) {
    baseline[r] = results[r][0];
    for (std::size_t j = 0; j < menu.size(); ++j) deviated[j][r] = results[r][j + 1];
  }
  return assemble(arm, DeviationMethod::MonteCarlo, num_runs, baseline, deviated, menu);
}

std::vector<double> exact_utility_oracle(const TrueContextSequence& instance,
                                         const MechanismConfig& mechanism,
                                         const std::vector<Strategy>& profile,
                                         std::uint64_t seed) {
  const int K = instance.num_arms();
  const int T = instance.horizon();
  if (T > kOracleMaxHorizon || K > kOracleMaxArms) {
    throw Error("exact_utility_oracle: instance too large (T <= 3, K <= 3)");
  }
  const auto noise = instance.noise().kind;
  if (noise != NoiseModel::Kind::None && noise != NoiseModel::Kind::Bernoulli) {
    throw Error("exact_utility_oracle: noise must be none or bernoulli");
  }
  if (static_cast<int>(profile.size()) != K) {
    throw Error("exact_utility_oracle: profile size does not match the instance");
  }
  for (const Strategy& s : profile) {
    if (!s.deterministic()) {
      throw Error("exact_utility_oracle: strategy '" + s.kind() + "' is randomised");
    }
  }

  GameShape shape{K, instance.dim(), T,
                  knows_theta(mechanism.kind) ? instance.theta_star() : Vec(), instance.s_bound()};
  OracleState root{Mechanism(mechanism, shape, 0), profile, std::vector<int>(K, 0)};
  seed_profile(root.arms, seed);
  for (int i = 0; i < K; ++i) root.arms[i].begin_episode(instance, i);

  std::vector<double> expected(K, 0.0);
  Enumerator(instance, expected).run(std::move(root), 0, 1.0);
  return expected;
}

DeviationReport exact_deviation_gain(const TrueContextSequence& instance,
                                     const MechanismConfig& mechanism,
                                     const std::vector<Strategy>& profile, int arm,
                                     const std::vector<Deviation>& menu, std::uint64_t seed) {
  check_arm(arm, profile.size());
  const std::vector<double> baseline{exact_utility_oracle(instance, mechanism, profile, seed)[arm]};
  std::vector<std::vector<double>> deviated;
  for (const Deviation& dev : menu) {
    std::vector<Strategy> p = profile;
    p[arm] = dev.strategy;
    deviated.push_back({exact_utility_oracle(instance, mechanism, p, seed)[arm]});
  }
  return assemble(arm, DeviationMethod::ExactOracle, 1, baseline, deviated, menu);
}

}  // namespace slcb
