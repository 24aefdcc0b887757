#pragma once

#include "slcb/arms.hpp"
#include "slcb/environment.hpp"
#include "slcb/mechanism.hpp"
#include "slcb/simulator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace slcb {

/// Strategic regret of one episode, computed from true contexts.
struct RegretSeries {
  std::vector<double> instantaneous;
  std::vector<double> cumulative;
  double total = 0.0;
};

/// Rounds with an empty active set count the full optimal value.
/// Throws if `log` was not produced on `instance`.
RegretSeries strategic_regret(const SimulationLog& log, const TrueContextSequence& instance);
RegretSeries strategic_regret(const SimulationLog& log);

/// sum_{t,i} |x*_{t,i} - x_{t,i}| over the episode.
double manipulation_mass(const SimulationLog& log);

enum class DeviationMethod { MonteCarlo, ExactOracle };
std::string to_string(DeviationMethod method);

struct Deviation {
  std::string label;
  Strategy strategy;
};

struct DeviationOutcome {
  std::string label;
  double utility = 0.0;
  double std_error = 0.0;
  /// Mean paired difference against the baseline.
  double gain = 0.0;
  double gain_std_error = 0.0;
};

struct DeviationReport {
  int arm = 0;
  DeviationMethod method = DeviationMethod::MonteCarlo;
  int num_runs = 0;
  double baseline_utility = 0.0;
  double baseline_std_error = 0.0;
  std::vector<DeviationOutcome> deviations;
  /// Index into `deviations` of the best one; -1 when none beats the baseline.
  int best = -1;
  /// max(0, best gain): the baseline is part of the search set.
  double gain = 0.0;
  double gain_std_error = 0.0;
};

/// Monte-Carlo estimate of arm `arm`'s best gain in expected pulls from a
/// unilateral switch to a menu strategy. Every deviation is paired with the
/// baseline on the same seeds (common random numbers). Needs num_runs >= 2.
DeviationReport deviation_gain(const EnvironmentSpec& env, const MechanismConfig& mechanism,
                               const std::vector<Strategy>& profile, int arm,
                               const std::vector<Deviation>& menu, int num_runs,
                               std::uint64_t seed, int parallelism = 1);

/// Limits of the exhaustive oracle.
inline constexpr int kOracleMaxHorizon = 3;
inline constexpr int kOracleMaxArms = 3;
inline constexpr long kOracleMaxBranches = 1'000'000;

/// Exact expected pulls per arm, by enumerating every selection branch and
/// every reward outcome. Needs noise none or bernoulli and deterministic
/// strategies.
std::vector<double> exact_utility_oracle(const TrueContextSequence& instance,
                                         const MechanismConfig& mechanism,
                                         const std::vector<Strategy>& profile,
                                         std::uint64_t seed = 0);

/// deviation_gain with exact utilities; standard errors are zero.
DeviationReport exact_deviation_gain(const TrueContextSequence& instance,
                                     const MechanismConfig& mechanism,
                                     const std::vector<Strategy>& profile, int arm,
                                     const std::vector<Deviation>& menu, std::uint64_t seed = 0);

}  // namespace slcb
