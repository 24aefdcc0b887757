#include "slcb/environment.hpp"

#include "slcb/geometry.hpp"
#include "slcb/random.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace slcb {

namespace {

constexpr double kNormTol = 1e-12;

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < bytes; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Lowest index wins ties.
int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (int i = 1; i < row.size(); ++i) {
    if (row(i) > row(best)) best = i;
  }
  return best;
}

// Row statistics the synthetic generator needs to accept a draw.
struct RowCheck {
  double best = 0;
  double second = -std::numeric_limits<double>::infinity();
  double worst = 0;
};

RowCheck check_row(const Eigen::RowVectorXd& values) {
  RowCheck c;
  const int best = argmax_lowest(values);
  c.best = values(best);
  c.worst = values.minCoeff();
  for (int i = 0; i < values.size(); ++i) {
    if (i != best) c.second = std::max(c.second, values(i));
  }
  return c;
}

// Fills `round` with phi(c, y_i) and says whether the row meets the gap,
// range and (for bernoulli noise) mean conditions.
bool draw_round(const Vec& theta, const Mat& features, const Vec& c, double min_gap,
                bool bernoulli, Mat& round) {
  for (Index i = 0; i < features.cols(); ++i) round.col(i) = feature_map(c, features.col(i));
  const Eigen::RowVectorXd values = theta.transpose() * round;
  const RowCheck rc = check_row(values);
  return rc.best - rc.second >= min_gap && rc.best - rc.worst <= 1.0 &&
         (!bernoulli || (rc.worst >= 0.0 && rc.best <= 1.0));
}

constexpr int kWorldProbes = 200;
constexpr int kWorldMinAccepted = 10;
constexpr int kWorldMaxDraws = 1000;

}  // namespace

std::string to_string(NoiseModel::Kind kind) {
  switch (kind) {
    case NoiseModel::Kind::None: return "none";
    case NoiseModel::Kind::Gaussian: return "gaussian";
    case NoiseModel::Kind::Bernoulli: return "bernoulli";
  }
  return "unknown";
}

NoiseModel::Kind parse_noise_kind(const std::string& name) {
  if (name == "none") return NoiseModel::Kind::None;
  if (name == "gaussian") return NoiseModel::Kind::Gaussian;
  if (name == "bernoulli") return NoiseModel::Kind::Bernoulli;
  throw ValidationError("environment.noise.kind", "unknown noise model '" + name + "'");
}

void EnvironmentSpec::validate() const {
  if (dim <= 0) throw ValidationError("environment.dim", "must be a positive integer");
  if (num_arms <= 0) throw ValidationError("environment.num_arms", "must be a positive integer");
  if (horizon <= 0) throw ValidationError("environment.horizon", "must be a positive integer");
  if (noise.kind == NoiseModel::Kind::Gaussian && !(noise.sigma >= 0.0)) {
    throw ValidationError("environment.noise.sigma", "must be >= 0");
  }
  if (theta_star) {
    if (theta_star->size() != dim) {
      throw ValidationError("environment.theta_star", "length must equal dim");
    }
    if (!theta_star->allFinite()) throw ValidationError("environment.theta_star", "non-finite");
  }
  if (s_bound) {
    if (!(*s_bound >= 0.0)) throw ValidationError("environment.s_bound", "must be >= 0");
    if (theta_star && *s_bound + 1e-12 < theta_star->norm()) {
      throw ValidationError("environment.s_bound", "must be >= |theta_star|");
    }
  }
  if (const auto* ex = std::get_if<ExplicitContexts>(&contexts)) {
    if (!theta_star) {
      throw ValidationError("environment.theta_star", "required for explicit contexts");
    }
    if (static_cast<int>(ex->contexts.size()) != horizon) {
      throw ValidationError("environment.contexts", "expected " + std::to_string(horizon) +
                                                        " rounds, got " +
                                                        std::to_string(ex->contexts.size()));
    }
    for (std::size_t t = 0; t < ex->contexts.size(); ++t) {
      const Mat& m = ex->contexts[t];
      if (m.rows() != dim || m.cols() != num_arms) {
        throw ValidationError("environment.contexts", "round " + std::to_string(t) +
                                                          " has wrong shape");
      }
      for (int i = 0; i < num_arms; ++i) {
        if (!m.col(i).allFinite() || !in_unit_ball(m.col(i), kNormTol)) {
          throw ValidationError("environment.contexts",
                                "context (t=" + std::to_string(t) + ", arm=" +
                                    std::to_string(i) + ") violates |x| <= 1");
        }
      }
    }
  } else {
    const auto& syn = std::get<SyntheticContexts>(contexts);
    if (!(syn.min_gap > 0.0)) {
      throw ValidationError("environment.contexts.min_gap", "must be positive");
    }
    if (syn.max_resamples <= 0) {
      throw ValidationError("environment.contexts.max_resamples", "must be positive");
    }
    if (num_arms < 2) {
      throw ValidationError("environment.num_arms", "synthetic contexts need at least 2 arms");
    }
    if (syn.arm_features && (syn.arm_features->rows() != dim ||
                             syn.arm_features->cols() != num_arms)) {
      throw ValidationError("environment.contexts.arm_features", "must be dim x num_arms");
    }
  }
}

TrueContextSequence::TrueContextSequence(Vec theta_star, std::vector<Mat> contexts,
                                         NoiseModel noise, double s_bound,
                                         std::vector<Vec> users, Mat arm_features)
    : theta_star_(std::move(theta_star)),
      contexts_(std::move(contexts)),
      noise_(noise),
      s_bound_(s_bound),
      users_(std::move(users)),
      arm_features_(std::move(arm_features)) {
  if (contexts_.empty()) throw Error("TrueContextSequence: empty horizon");
  const int T = horizon();
  const int K = static_cast<int>(contexts_.front().cols());
  values_.resize(T, K);
  gaps_.resize(T, K);
  optimal_.resize(T);
  for (int t = 0; t < T; ++t) {
    if (contexts_[t].rows() != theta_star_.size() || contexts_[t].cols() != K) {
      throw Error("TrueContextSequence: inconsistent round shape");
    }
    values_.row(t) = theta_star_.transpose() * contexts_[t];
    optimal_[t] = argmax_lowest(values_.row(t));
    gaps_.row(t) = values_(t, optimal_[t]) - values_.row(t).array();
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(theta_star_.data(), sizeof(double) * theta_star_.size(), h);
  h = fnv1a(values_.data(), sizeof(double) * values_.size(), h);
  fingerprint_ = h;
}

double TrueContextSequence::min_positive_gap() const {
  double best = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < gaps_.size(); ++k) {
    const double g = gaps_.data()[k];
    if (g > 0.0) best = std::min(best, g);
  }
  return best;
}

EnvironmentSpec pin_world(const EnvironmentSpec& spec, std::uint64_t seed) {
  spec.validate();
  EnvironmentSpec out = spec;
  auto* syn = std::get_if<SyntheticContexts>(&out.contexts);
  if (syn == nullptr) return out;
  Rng rng(derive_seed(seed, Stream::World));
  if (!out.theta_star) out.theta_star = uniform_on_sphere(spec.dim, rng);
  if (syn->arm_features) return out;
  // Redraw features that almost never produce an acceptable round.
  const bool bernoulli = spec.noise.kind == NoiseModel::Kind::Bernoulli;
  Mat features(spec.dim, spec.num_arms);
  Mat round(spec.dim, spec.num_arms);
  for (int draw = 0; draw < kWorldMaxDraws; ++draw) {
    for (int i = 0; i < spec.num_arms; ++i) features.col(i) = uniform_on_sphere(spec.dim, rng);
    Rng probe(derive_seed(derive_seed(seed, Stream::World, 1), Stream::Instance, draw));
    int accepted = 0;
    for (int k = 0; k < kWorldProbes && accepted < kWorldMinAccepted; ++k) {
      const Vec c = uniform_on_sphere(spec.dim, probe).cwiseAbs();
      accepted += draw_round(*out.theta_star, features, c, syn->min_gap, bernoulli, round);
    }
    if (accepted >= kWorldMinAccepted) {
      syn->arm_features = std::move(features);
      return out;
    }
  }
  throw ValidationError("environment.contexts.min_gap",
                        "no arm features reach the minimum gap; lower min_gap");
}

TrueContextSequence generate_instance(const EnvironmentSpec& spec_in, std::uint64_t seed) {
  const EnvironmentSpec spec = pin_world(spec_in, seed);
  const Vec& theta = *spec.theta_star;
  const double s_bound = spec.s_bound.value_or(theta.norm());
  const bool bernoulli = spec.noise.kind == NoiseModel::Kind::Bernoulli;

  if (const auto* ex = std::get_if<ExplicitContexts>(&spec.contexts)) {
    TrueContextSequence seq(theta, ex->contexts, spec.noise, s_bound);
    if (bernoulli && (seq.values().minCoeff() < 0.0 || seq.values().maxCoeff() > 1.0)) {
      throw ValidationError("environment.contexts",
                            "bernoulli noise needs every mean <theta*, x*> in [0, 1]");
    }
    return seq;
  }

  const auto& syn = std::get<SyntheticContexts>(spec.contexts);
  const Mat& features = *syn.arm_features;
  Rng rng(derive_seed(seed, Stream::Instance));
  std::vector<Mat> contexts(spec.horizon, Mat(spec.dim, spec.num_arms));
  std::vector<Vec> users(spec.horizon);
  for (int t = 0; t < spec.horizon; ++t) {
    bool accepted = false;
    for (int attempt = 0; attempt < syn.max_resamples && !accepted; ++attempt) {
      // User features are nonnegative intensities: |u| for u uniform on the sphere.
      const Vec c = uniform_on_sphere(spec.dim, rng).cwiseAbs();
      accepted = draw_round(theta, features, c, syn.min_gap, bernoulli, contexts[t]);
      if (accepted) users[t] = c;
    }
    if (!accepted) {
      throw Error("generate_instance: round " + std::to_string(t) + " failed the min-gap " +
                  "condition after " + std::to_string(syn.max_resamples) + " resamples");
    }
  }
  return TrueContextSequence(theta, std::move(contexts), spec.noise, s_bound, std::move(users),
                             features);
}

double sample_reward(const Vec& theta_star, const Eigen::Ref<const Vec>& x_true,
                     const NoiseModel& noise, Rng& rng) {
  const double mean = theta_star.dot(x_true);
  switch (noise.kind) {
    case NoiseModel::Kind::None: return mean;
    case NoiseModel::Kind::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      return mean + noise.sigma * normal(rng);
    }
    case NoiseModel::Kind::Bernoulli: {
      if (mean < 0.0 || mean > 1.0) {
        throw Error("sample_reward: bernoulli mean " + std::to_string(mean) +
                    " outside [0, 1]");
      }
      return canonical(rng) < mean ? 1.0 : 0.0;
    }
  }
  return mean;
}

EnvironmentSpec read_instance_text(std::istream& in) {
  int d = 0, K = 0, T = 0;
  if (!(in >> d >> K >> T) || d <= 0 || K <= 0 || T <= 0) {
    throw ValidationError("instance", "bad header, expected 'd K T'");
  }
  EnvironmentSpec spec;
  spec.dim = d;
  spec.num_arms = K;
  spec.horizon = T;
  ExplicitContexts ex;
  ex.contexts.assign(T, Mat(d, K));
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < K; ++i) {
      for (int k = 0; k < d; ++k) {
        if (!(in >> ex.contexts[t](k, i))) {
          throw ValidationError("instance", "truncated context rows at t=" + std::to_string(t) +
                                                ", arm=" + std::to_string(i));
        }
      }
    }
  }
  Vec theta(d);
  for (int k = 0; k < d; ++k) {
    if (!(in >> theta(k))) throw ValidationError("instance", "missing theta* row");
  }
  spec.theta_star = theta;
  spec.contexts = std::move(ex);
  spec.validate();
  return spec;
}

EnvironmentSpec read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("instance", "cannot open '" + path + "'");
  return read_instance_text(in);
}

void write_instance_text(std::ostream& out, const EnvironmentSpec& spec) {
  const auto* ex = std::get_if<ExplicitContexts>(&spec.contexts);
  if (ex == nullptr || !spec.theta_star) {
    throw Error("write_instance_text: only explicit instances can be written");
  }
  out << spec.dim << ' ' << spec.num_arms << ' ' << spec.horizon << '\n';
  out << std::setprecision(17);
  auto row = [&out](const auto& v) {
    for (Index k = 0; k < v.size(); ++k) out << (k ? " " : "") << v(k);
    out << '\n';
  };
  for (const Mat& m : ex->contexts) {
    for (Index i = 0; i < m.cols(); ++i) row(m.col(i));
  }
  row(*spec.theta_star);
}

}  // namespace slcb
