#pragma once

#include "slcb/arms.hpp"
#include "slcb/environment.hpp"
#include "slcb/mechanism.hpp"
#include "slcb/types.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace slcb {

using InstancePtr = std::shared_ptr<const TrueContextSequence>;

struct EpisodeSeeds {
  std::uint64_t noise = 0;
  std::uint64_t mechanism = 0;
};

struct RunOptions {
  /// Runtime checks of the reporting assumptions and the manipulation bound.
  bool instrument = false;
  /// Keep per-round report matrices and scores (memory heavy at T = 10^4).
  bool keep_reports = true;
};

struct RoundRecord {
  int t = 0;
  /// Selected arm, -1 when the active set was empty.
  int arm = -1;
  double reward = 0.0;
  /// Tie-break variable; replaying it reproduces the selection.
  double tie_draw = 0.0;
  /// Active arms at selection time.
  int active_count = 0;
  /// sum_i |x*_{t,i} - x_{t,i}|.
  double manipulation = 0.0;
  bool projected = false;
  bool eliminated = false;
};

/// Reports (d x K) and the mechanism's scores for one round.
struct RoundDetail {
  Mat reports;
  std::vector<double> scores;
};

struct ArmSummary {
  int pulls = 0;
  /// Rounds where this arm was the round-optimal arm.
  int optimal_rounds = 0;
  std::optional<int> eliminated_at;
  /// First round the arm is no longer active; T if never eliminated.
  int tau = 0;
  double manipulation = 0.0;
  /// Instrumented rounds where <theta*, x> fell below the true value.
  int value_underreports = 0;
  /// Instrumented rounds where the optimistic public score of the report
  /// fell below the true value (OptGTM and LinUCB only).
  int score_below_truth = 0;
};

/// Runtime checks enabled by RunOptions::instrument.
struct Instrumentation {
  bool enabled = false;
  /// |sum_l (<theta*, x*_l> - r_l)| <= 2 sqrt(n log T) held for every arm and round.
  bool noise_in_band = true;
  /// Rounds x active arms checked against the known-theta manipulation bound.
  long bound_checks = 0;
  long bound_violations = 0;
  /// Largest sum <theta*, x - x*> - 4 sqrt(n log T) seen over active arms.
  double bound_max_excess = -std::numeric_limits<double>::infinity();
};

struct SimulationLog {
  InstancePtr instance;
  std::string mechanism;
  MechanismKind kind = MechanismKind::Uniform;
  int epoch = 0;
  EpisodeSeeds seeds;
  std::string fingerprint;
  std::vector<RoundRecord> rounds;
  std::vector<RoundDetail> details;
  std::vector<ArmSummary> arms;
  int empty_rounds = 0;
  Instrumentation instrumentation;

  int horizon() const { return static_cast<int>(rounds.size()); }
  int num_arms() const { return static_cast<int>(arms.size()); }
};

/// Runs T rounds of the protocol. `arms` carry state across calls (epochs).
SimulationLog run_episode(const InstancePtr& instance, const MechanismConfig& mechanism,
                          std::vector<Strategy>& arms, const EpisodeSeeds& seeds,
                          const RunOptions& options = {});

/// Convenience overload on a copy of the profile.
SimulationLog run_episode_copy(const InstancePtr& instance, const MechanismConfig& mechanism,
                               std::vector<Strategy> arms, const EpisodeSeeds& seeds,
                               const RunOptions& options = {});

/// Seeds used for epoch `epoch` of a run with master seed `master`.
struct EpochSeeds {
  std::uint64_t instance = 0;
  EpisodeSeeds episode;
};
EpochSeeds epoch_seeds(std::uint64_t master, int epoch);

/// Seeds each arm's strategy from the master seed (arm i gets its own stream).
void seed_profile(std::vector<Strategy>& arms, std::uint64_t master);

/// E epochs; the mechanism restarts fresh each epoch, the arms persist and
/// take an epoch step. The world (theta*, arm features) is drawn once from
/// `master`; user contexts are redrawn per epoch.
std::vector<SimulationLog> run_epochs(const EnvironmentSpec& spec,
                                      const MechanismConfig& mechanism,
                                      std::vector<Strategy> arms, int num_epochs,
                                      std::uint64_t master, const RunOptions& options = {},
                                      const std::function<void(const SimulationLog&)>& on_epoch = {});

/// Mean and standard error of a sample.
struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Pairwise (cascade) summation; the result depends only on element order.
double pairwise_sum(const std::vector<double>& values);
Summary summarize(const std::vector<double>& values);

/// Raised when a batch job throws; names the job.
class BatchError : public Error {
 public:
  BatchError(std::size_t index, std::string label, const std::string& what)
      : Error("job " + std::to_string(index) + " (" + label + ") failed: " + what),
        index_(index),
        label_(std::move(label)) {}
  std::size_t index() const { return index_; }
  const std::string& label() const { return label_; }

 private:
  std::size_t index_;
  std::string label_;
};

/// Runs `count` independent jobs on up to `parallelism` threads. Results are
/// stored by job index, so they do not depend on scheduling. The first
/// failing job (by index) is rethrown as BatchError.
template <typename R>
std::vector<R> run_batch(std::size_t count, int parallelism,
                         const std::function<R(std::size_t)>& job,
                         const std::function<std::string(std::size_t)>& describe);

}  // namespace slcb

#include "slcb/detail/batch_impl.hpp"
