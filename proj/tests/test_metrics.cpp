#include "slcb/metrics.hpp"
#include "slcb/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace slcb;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(v.size());
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

Mat columns(std::initializer_list<Vec> cols) {
  Mat m(cols.begin()->size(), cols.size());
  Index i = 0;
  for (const Vec& c : cols) m.col(i++) = c;
  return m;
}

MechanismConfig mech(MechanismKind kind) {
  MechanismConfig m;
  m.kind = kind;
  return m;
}

EnvironmentSpec explicit_env(const Vec& theta, std::vector<Mat> rounds,
                             NoiseModel noise = NoiseModel::none()) {
  EnvironmentSpec spec;
  spec.dim = static_cast<int>(theta.size());
  spec.num_arms = static_cast<int>(rounds.front().cols());
  spec.horizon = static_cast<int>(rounds.size());
  spec.theta_star = theta;
  spec.noise = noise;
  spec.contexts = ExplicitContexts{std::move(rounds)};
  return spec;
}

InstancePtr instance_of(const EnvironmentSpec& spec) {
  return std::make_shared<const TrueContextSequence>(generate_instance(spec, 0));
}

// Arm 0 under-reports on odd rounds of the alternating 1-d instance.
EnvironmentSpec alternating(int T) {
  std::vector<Mat> rounds;
  for (int t = 0; t < T; ++t)
    rounds.push_back(columns({vec({t % 2 == 0 ? 0.0 : 1.0}), vec({0.25})}));
  return explicit_env(vec({1.0}), rounds);
}

}  // namespace

TEST_CASE("selecting a gap-0.25 arm costs 0.25") {
  const EnvironmentSpec spec = explicit_env(vec({1.0}), {columns({vec({0.5}), vec({0.25})})});
  std::vector<Strategy> arms{FixedSequence{{vec({0.0})}}, Truthful{}};
  const SimulationLog log =
      run_episode(instance_of(spec), mech(MechanismKind::GreedyKnownTheta), arms, {});
  CHECK(log.rounds[0].arm == 1);
  const RegretSeries r = strategic_regret(log);
  CHECK(r.instantaneous[0] == doctest::Approx(0.25));
  CHECK(r.total == doctest::Approx(0.25));
}

TEST_CASE("truthful greedy with known theta has zero regret") {
  EnvironmentSpec spec;
  spec.dim = 3;
  spec.num_arms = 4;
  spec.horizon = 200;
  const auto logs = run_epochs(spec, mech(MechanismKind::GreedyKnownTheta),
                               std::vector<Strategy>(4), 1, 31);
  CHECK(strategic_regret(logs[0]).total == 0.0);
}

TEST_CASE("uniform selection on the alternating instance has expected regret T/4") {
  // Per round: max - mean of (0, 0.25) is 0.125 and of (1, 0.25) is 0.375.
  const int T = 40, runs = 400;
  const EnvironmentSpec spec = alternating(T);
  const InstancePtr inst = instance_of(spec);
  std::vector<double> totals;
  for (int r = 0; r < runs; ++r) {
    std::vector<Strategy> arms(2);
    const auto log = run_episode(inst, mech(MechanismKind::Uniform), arms,
                                 EpisodeSeeds{0, derive_seed(8, Stream::Run, r)});
    totals.push_back(strategic_regret(log).total);
  }
  const Summary s = summarize(totals);
  CHECK(std::abs(s.mean - T / 4.0) <= 3 * s.std_error);
}

TEST_CASE("regret decomposes over arms and empty rounds") {
  EnvironmentSpec spec;
  spec.dim = 3;
  spec.num_arms = 3;
  spec.horizon = 300;
  std::vector<Strategy> arms{Myopic{}, RandomOverreport{}, Truthful{}};
  const auto logs = run_epochs(spec, mech(MechanismKind::GGTM), arms, 1, 4);
  const SimulationLog& log = logs[0];
  const TrueContextSequence& inst = *log.instance;
  double by_arm = 0.0;
  for (int t = 0; t < log.horizon(); ++t) {
    const int a = log.rounds[t].arm;
    by_arm += a < 0 ? inst.value(t, inst.optimal_arm(t)) : inst.gap(t, a);
  }
  const RegretSeries r = strategic_regret(log);
  CHECK(r.total == doctest::Approx(by_arm).epsilon(1e-12));
  CHECK(r.cumulative.back() == doctest::Approx(r.total));
  for (std::size_t t = 1; t < r.cumulative.size(); ++t)
    CHECK(r.cumulative[t] >= r.cumulative[t - 1]);
}

TEST_CASE("regret refuses a log from another instance") {
  const EnvironmentSpec a = alternating(4);
  const EnvironmentSpec b = alternating(6);
  std::vector<Strategy> arms(2);
  const SimulationLog log = run_episode(instance_of(a), mech(MechanismKind::Uniform), arms, {});
  CHECK_THROWS_AS(strategic_regret(log, *instance_of(b)), Error);
}

TEST_CASE("manipulation mass") {
  const EnvironmentSpec spec = explicit_env(vec({1.0, 0.0}), {columns({vec({0.5, 0.0})})});
  std::vector<Strategy> arms{FixedSequence{{vec({-0.5, 0.0})}}};
  const SimulationLog log =
      run_episode(instance_of(spec), mech(MechanismKind::GreedyKnownTheta), arms, {});
  CHECK(manipulation_mass(log) == doctest::Approx(1.0));

  EnvironmentSpec syn;
  syn.dim = 4;
  syn.num_arms = 2;
  syn.horizon = 100;
  const auto truthful = run_epochs(syn, mech(MechanismKind::OptGTM), std::vector<Strategy>(2), 1, 3);
  CHECK(manipulation_mass(truthful[0]) == 0.0);
  const auto lr = run_epochs(syn, mech(MechanismKind::OptGTM),
                             {Strategy(LinearRealizable{}), Strategy(Truthful{})}, 1, 3);
  CHECK(manipulation_mass(lr[0]) > 0.0);
}

TEST_CASE("exact oracle on one greedy round") {
  const EnvironmentSpec spec =
      explicit_env(vec({1.0, 0.0}), {columns({vec({0.5, 0.0}), vec({0.3, 0.0})})});
  const TrueContextSequence inst = generate_instance(spec, 0);
  const auto greedy = mech(MechanismKind::GreedyKnownTheta);
  const auto truthful = exact_utility_oracle(inst, greedy, std::vector<Strategy>(2));
  CHECK(truthful == std::vector<double>{1.0, 0.0});

  std::vector<Strategy> lie{Truthful{}, FixedSequence{{vec({1.0, 0.0})}}};
  CHECK(exact_utility_oracle(inst, greedy, lie) == std::vector<double>{0.0, 1.0});

  const DeviationReport rep = exact_deviation_gain(
      inst, greedy, std::vector<Strategy>(2), 1, {Deviation{"claim", lie[1]}});
  CHECK(rep.gain == 1.0);
  CHECK(rep.best == 0);
  CHECK(rep.gain_std_error == 0.0);

  const auto uniform = exact_utility_oracle(inst, mech(MechanismKind::Uniform), lie);
  CHECK(uniform[0] == doctest::Approx(0.5));
  CHECK(uniform[1] == doctest::Approx(0.5));
}

TEST_CASE("exact oracle limits") {
  const TrueContextSequence long_inst = generate_instance(alternating(4), 0);
  CHECK_THROWS_AS(exact_utility_oracle(long_inst, mech(MechanismKind::Uniform),
                                       std::vector<Strategy>(2)),
                  Error);
  const TrueContextSequence inst = generate_instance(alternating(2), 0);
  std::vector<Strategy> random{RandomOverreport{}, Truthful{}};
  CHECK_THROWS_AS(exact_utility_oracle(inst, mech(MechanismKind::Uniform), random), Error);
}

TEST_CASE("exact oracle sums to the horizon for mechanisms that never empty") {
  std::vector<Mat> rounds{columns({vec({0.4}), vec({0.6}), vec({0.5})}),
                          columns({vec({0.9}), vec({0.2}), vec({0.1})}),
                          columns({vec({0.3}), vec({0.3}), vec({0.7})})};
  const TrueContextSequence inst =
      generate_instance(explicit_env(vec({1.0}), rounds, NoiseModel::bernoulli()), 0);
  for (auto kind : {MechanismKind::OptGTM, MechanismKind::LinUCB, MechanismKind::Uniform}) {
    const auto u = exact_utility_oracle(inst, mech(kind), std::vector<Strategy>(3));
    CHECK(u[0] + u[1] + u[2] == doctest::Approx(3.0));
  }
}

TEST_CASE("deviating to the baseline strategy gains nothing") {
  EnvironmentSpec spec;
  spec.dim = 3;
  spec.num_arms = 3;
  spec.horizon = 200;
  const std::vector<Strategy> profile(3);
  const DeviationReport rep = deviation_gain(spec, mech(MechanismKind::OptGTM), profile, 1,
                                             {Deviation{"same", Truthful{}}}, 20, 5);
  CHECK(rep.deviations[0].gain == 0.0);
  CHECK(rep.gain == 0.0);
  CHECK(rep.best == -1);
  CHECK_THROWS_AS(deviation_gain(spec, mech(MechanismKind::OptGTM), profile, 1, {}, 1, 5), Error);
}

TEST_CASE("greedy with known theta: a never-optimal arm gains at least T / (2K) by lying") {
  const int T = 200, K = 3;
  std::vector<Mat> rounds(T, columns({vec({0.6, 0.0}), vec({0.4, 0.0}), vec({0.1, 0.0})}));
  const EnvironmentSpec spec = explicit_env(vec({1.0, 0.0}), rounds);
  const DeviationReport rep =
      deviation_gain(spec, mech(MechanismKind::GreedyKnownTheta), std::vector<Strategy>(K), 2,
                     {Deviation{"myopic", Myopic{}}}, 10, 2);
  CHECK(rep.baseline_utility == 0.0);
  CHECK(rep.gain >= T / (2.0 * K));
}

TEST_CASE("Monte-Carlo utilities agree with the exact oracle") {
  std::vector<Mat> rounds{columns({vec({0.4, 0.1}), vec({0.5, 0.2})}),
                          columns({vec({0.7, 0.0}), vec({0.2, 0.3})}),
                          columns({vec({0.3, 0.3}), vec({0.35, 0.1})})};
  const EnvironmentSpec spec = explicit_env(vec({1.0, 0.0}), rounds, NoiseModel::bernoulli());
  const TrueContextSequence inst = generate_instance(spec, 0);
  Scripted claim;
  claim.script.push_back({Scripted::Entry::Match::Odd, 0, std::nullopt});
  const std::vector<Strategy> profile(2);
  const std::vector<Deviation> menu{Deviation{"claim_odd", claim}};
  for (auto kind : {MechanismKind::GGTM, MechanismKind::OptGTM, MechanismKind::Uniform}) {
    const DeviationReport exact = exact_deviation_gain(inst, mech(kind), profile, 1, menu);
    const DeviationReport mc = deviation_gain(spec, mech(kind), profile, 1, menu, 4000, 12);
    CHECK(std::abs(mc.baseline_utility - exact.baseline_utility) <=
          3 * mc.baseline_std_error + 1e-12);
    CHECK(std::abs(mc.deviations[0].utility - exact.deviations[0].utility) <=
          3 * mc.deviations[0].std_error + 1e-12);
  }
}
