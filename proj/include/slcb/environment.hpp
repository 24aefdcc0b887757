#pragma once

#include "slcb/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace slcb {

struct NoiseModel {
  enum class Kind { None, Gaussian, Bernoulli };

  Kind kind = Kind::Gaussian;
  double sigma = 0.1;

  static NoiseModel none() { return {Kind::None, 0.0}; }
  static NoiseModel gaussian(double sigma) { return {Kind::Gaussian, sigma}; }
  static NoiseModel bernoulli() { return {Kind::Bernoulli, 0.0}; }

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

std::string to_string(NoiseModel::Kind kind);
NoiseModel::Kind parse_noise_kind(const std::string& name);

/// Contexts given verbatim: `contexts[t]` is a d x K matrix whose column i
/// is the true context of arm i in round t.
struct ExplicitContexts {
  std::vector<Mat> contexts;
};

/// Contexts x_{t,i} = phi(c_t, y_i) built from random user vectors c_t and
/// per-arm feature vectors y_i. User vectors are redrawn until the round's
/// optimality gap is at least `min_gap`.
struct SyntheticContexts {
  double min_gap = 0.05;
  int max_resamples = 10000;
  /// Fixed arm features (columns); drawn from the seed when absent.
  std::optional<Mat> arm_features;
};

struct EnvironmentSpec {
  int dim = 5;
  int num_arms = 5;
  int horizon = 10000;
  /// Drawn uniformly from the unit sphere when absent (synthetic path only).
  std::optional<Vec> theta_star;
  NoiseModel noise = NoiseModel::gaussian(0.1);
  std::variant<SyntheticContexts, ExplicitContexts> contexts = SyntheticContexts{};
  /// Bound S >= |theta*|; defaults to |theta*|.
  std::optional<double> s_bound;

  bool is_synthetic() const { return std::holds_alternative<SyntheticContexts>(contexts); }

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Ground truth for one episode. Immutable once generated.
class TrueContextSequence {
 public:
  TrueContextSequence(Vec theta_star, std::vector<Mat> contexts, NoiseModel noise,
                      double s_bound, std::vector<Vec> users = {}, Mat arm_features = {});

  int horizon() const { return static_cast<int>(contexts_.size()); }
  int num_arms() const { return static_cast<int>(values_.cols()); }
  int dim() const { return static_cast<int>(theta_star_.size()); }

  const Vec& theta_star() const { return theta_star_; }
  double s_bound() const { return s_bound_; }
  const NoiseModel& noise() const { return noise_; }

  /// d x K matrix of true contexts for round t.
  const Mat& round(int t) const { return contexts_.at(t); }
  auto context(int t, int arm) const { return contexts_.at(t).col(arm); }

  /// <theta*, x*_{t,i}> as a T x K matrix.
  const Mat& values() const { return values_; }
  double value(int t, int arm) const { return values_(t, arm); }

  /// Delta_{t,i} = value of the round-optimal arm minus value of arm i.
  const Mat& gaps() const { return gaps_; }
  double gap(int t, int arm) const { return gaps_(t, arm); }

  const std::vector<int>& optimal_arm() const { return optimal_; }
  int optimal_arm(int t) const { return optimal_.at(t); }

  /// Smallest strictly positive gap, or +inf when every gap is zero.
  double min_positive_gap() const;

  /// User vectors c_t; empty for explicit instances.
  const std::vector<Vec>& users() const { return users_; }
  bool has_users() const { return !users_.empty(); }
  /// d x K arm feature vectors y*_i; empty for explicit instances.
  const Mat& arm_features() const { return arm_features_; }

  /// Hash of theta* and all true values; ties logs to the instance they came from.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  Vec theta_star_;
  std::vector<Mat> contexts_;
  NoiseModel noise_;
  double s_bound_;
  std::vector<Vec> users_;
  Mat arm_features_;
  Mat values_;
  Mat gaps_;
  std::vector<int> optimal_;
  std::uint64_t fingerprint_ = 0;
};

/// Draws theta* (when unset) and the arm feature vectors (when unset) for a
/// synthetic spec, returning a spec with both pinned. Explicit specs are
/// returned unchanged. Drawn features are redrawn until probe users reach the
/// minimum gap often enough.
EnvironmentSpec pin_world(const EnvironmentSpec& spec, std::uint64_t seed);

/// Deterministic in (spec, seed).
TrueContextSequence generate_instance(const EnvironmentSpec& spec, std::uint64_t seed);

/// Mean <theta*, x> plus noise drawn from `rng`.
double sample_reward(const Vec& theta_star, const Eigen::Ref<const Vec>& x_true,
                     const NoiseModel& noise, Rng& rng);

/// Plain-text instance: header "d K T", then T*K rows of d reals (round
/// major, then arm), then one row of d reals holding theta*.
EnvironmentSpec read_instance_text(std::istream& in);
EnvironmentSpec read_instance_file(const std::string& path);
void write_instance_text(std::ostream& out, const EnvironmentSpec& spec);

}  // namespace slcb
