#include "slcb/simulator.hpp"

#include "slcb/geometry.hpp"
#include "slcb/random.hpp"

#include <cmath>
#include <cstdio>

namespace slcb {

namespace {

constexpr double kCheckTol = 1e-9;

}  // namespace

SimulationLog run_episode(const InstancePtr& instance, const MechanismConfig& mechanism,
                          std::vector<Strategy>& arms, const EpisodeSeeds& seeds,
                          const RunOptions& options) {
  if (!instance) throw Error("run_episode: no instance");
  const TrueContextSequence& inst = *instance;
  const int K = inst.num_arms();
  const int T = inst.horizon();
  const int d = inst.dim();
  if (static_cast<int>(arms.size()) != K) {
    throw Error("run_episode: profile has " + std::to_string(arms.size()) + " arms, instance " +
                std::to_string(K));
  }

  GameShape shape{K, d, T, knows_theta(mechanism.kind) ? inst.theta_star() : Vec(),
                  inst.s_bound()};
  Mechanism mech(mechanism, shape, seeds.mechanism);
  Rng noise_rng(seeds.noise);
  for (int i = 0; i < K; ++i) arms[i].begin_episode(inst, i);

  SimulationLog log;
  log.instance = instance;
  log.mechanism = mechanism.name();
  log.kind = mechanism.kind;
  log.seeds = seeds;
  {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(inst.fingerprint()));
    log.fingerprint = buf;
  }
  log.rounds.reserve(T);
  if (options.keep_reports) log.details.reserve(T);
  log.arms.assign(K, ArmSummary{});
  log.instrumentation.enabled = options.instrument;

  const Vec& theta = inst.theta_star();
  const double log_t = std::log(static_cast<double>(T));
  const bool optimistic_scores =
      mechanism.kind == MechanismKind::OptGTM || mechanism.kind == MechanismKind::LinUCB;
  const bool check_bound = options.instrument && mechanism.kind == MechanismKind::GGTM;

  std::vector<double> true_sum(K, 0.0), reported_sum(K, 0.0), reward_sum(K, 0.0);
  std::vector<Vec> reports(K);
  std::vector<ScoreFunction> public_scores(K);

  for (int t = 0; t < T; ++t) {
    const Vec* user = inst.has_users() ? &inst.users()[t] : nullptr;
    RoundRecord rec;
    rec.t = t;
    rec.active_count = mech.active_count();

    for (int i = 0; i < K; ++i) {
      public_scores[i] = mech.public_score(i);
      const ArmView view{i, t, T, inst.context(t, i), user, theta, public_scores[i]};
      reports[i] = arms[i].report(view);
      const Vec x = project_unit_ball(reports[i]);
      const double moved = (inst.context(t, i) - x).norm();
      rec.manipulation += moved;
      log.arms[i].manipulation += moved;
      if (options.instrument) {
        const double truth = inst.value(t, i);
        if (theta.dot(x) < truth - kCheckTol) ++log.arms[i].value_underreports;
        if (optimistic_scores && public_scores[i](x) < truth - kCheckTol) {
          ++log.arms[i].score_below_truth;
        }
      }
    }

    const std::optional<int> chosen = mech.select(reports);
    rec.tie_draw = mech.last_draw();
    rec.projected = mech.last_projected();
    if (options.keep_reports) {
      RoundDetail detail;
      detail.reports.resize(d, K);
      for (int i = 0; i < K; ++i) detail.reports.col(i) = project_unit_ball(reports[i]);
      detail.scores = mech.last_scores();
      log.details.push_back(std::move(detail));
    }

    if (chosen) {
      const int a = *chosen;
      rec.arm = a;
      rec.reward = sample_reward(theta, inst.context(t, a), inst.noise(), noise_rng);
      rec.eliminated = mech.record(a, reports[a], rec.reward);
      ++log.arms[a].pulls;
      if (check_bound) {
        true_sum[a] += inst.value(t, a);
        reported_sum[a] += theta.dot(project_unit_ball(reports[a]));
        reward_sum[a] += rec.reward;
        if (std::abs(true_sum[a] - reward_sum[a]) > mech.reward_width(log.arms[a].pulls)) {
          log.instrumentation.noise_in_band = false;
        }
      }
    } else {
      ++log.empty_rounds;
    }

    for (int i = 0; i < K; ++i) {
      arms[i].observe(ArmFeedback{chosen && *chosen == i, chosen && *chosen == i ? rec.reward : 0.0});
    }

    if (check_bound) {
      auto& ins = log.instrumentation;
      for (int i = 0; i < K; ++i) {
        if (!mech.is_active(i)) continue;
        const double bound = 4.0 * std::sqrt(log.arms[i].pulls * log_t);
        const double excess = (reported_sum[i] - true_sum[i]) - bound;
        ++ins.bound_checks;
        ins.bound_max_excess = std::max(ins.bound_max_excess, excess);
        if (excess > kCheckTol) ++ins.bound_violations;
      }
    }
    log.rounds.push_back(rec);
  }

  for (int i = 0; i < K; ++i) {
    ArmSummary& s = log.arms[i];
    s.eliminated_at = mech.eliminated_at(i);
    s.tau = s.eliminated_at ? *s.eliminated_at + 1 : T;
  }
  for (int t = 0; t < T; ++t) ++log.arms[inst.optimal_arm(t)].optimal_rounds;
  return log;
}

SimulationLog run_episode_copy(const InstancePtr& instance, const MechanismConfig& mechanism,
                               std::vector<Strategy> arms, const EpisodeSeeds& seeds,
                               const RunOptions& options) {
  return run_episode(instance, mechanism, arms, seeds, options);
}

EpochSeeds epoch_seeds(std::uint64_t master, int epoch) {
  const auto e = static_cast<std::uint64_t>(epoch);
  return EpochSeeds{derive_seed(master, Stream::Instance, e),
                    EpisodeSeeds{derive_seed(master, Stream::Noise, e),
                                 derive_seed(master, Stream::Mechanism, e)}};
}

void seed_profile(std::vector<Strategy>& arms, std::uint64_t master) {
  for (std::size_t i = 0; i < arms.size(); ++i) {
    arms[i].reseed(derive_seed(master, Stream::Arm, i));
  }
}

std::vector<SimulationLog> run_epochs(const EnvironmentSpec& spec,
                                      const MechanismConfig& mechanism,
                                      std::vector<Strategy> arms, int num_epochs,
                                      std::uint64_t master, const RunOptions& options,
                                      const std::function<void(const SimulationLog&)>& on_epoch) {
  if (num_epochs < 1) throw Error("run_epochs: need at least one epoch");
  const EnvironmentSpec world = pin_world(spec, master);
  seed_profile(arms, master);
  std::vector<SimulationLog> logs;
  for (int e = 0; e < num_epochs; ++e) {
    const EpochSeeds seeds = epoch_seeds(master, e);
    auto instance = std::make_shared<const TrueContextSequence>(
        generate_instance(world, seeds.instance));
    SimulationLog log = run_episode(instance, mechanism, arms, seeds.episode, options);
    log.epoch = e;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      arms[i].end_epoch(log.arms[i].pulls);
    }
    if (on_epoch) {
      on_epoch(log);
    } else {
      logs.push_back(std::move(log));
    }
  }
  return logs;
}

double pairwise_sum(const std::vector<double>& values) {
  // Recursive halving below a small block size.
  auto rec = [&values](auto&& self, std::size_t lo, std::size_t hi) -> double {
    if (hi - lo <= 8) {
      double s = 0.0;
      for (std::size_t k = lo; k < hi; ++k) s += values[k];
      return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return self(self, lo, mid) + self(self, mid, hi);
  };
  return rec(rec, 0, values.size());
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() >= 2) {
    std::vector<double> sq(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      sq[k] = (values[k] - s.mean) * (values[k] - s.mean);
    }
    const double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
    s.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return s;
}

}  // namespace slcb
