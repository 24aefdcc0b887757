#include "slcb/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>

namespace slcb {

namespace {

std::string join(const std::string& field, const std::string& key) {
  return field.empty() ? key : field + "." + key;
}

std::string at_index(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

void require_object(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
}

void check_keys(const Json& j, const std::string& field,
                std::initializer_list<const char*> allowed) {
  require_object(j, field);
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ValidationError(join(field, key), "unknown key");
  }
}

template <typename T>
T read(const Json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(field, "wrong type");
  }
}

template <typename T>
T get_or(const Json& j, const char* key, const std::string& field, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return read<T>(j.at(key), join(field, key));
}

template <typename T>
std::optional<T> get_opt(const Json& j, const char* key, const std::string& field) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return read<T>(j.at(key), join(field, key));
}

Vec read_vec(const Json& j, const std::string& field) {
  const auto v = read<std::vector<double>>(j, field);
  return Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
}

/// Array of rows.
Mat read_mat(const Json& j, const std::string& field) {
  const auto rows = read<std::vector<std::vector<double>>>(j, field);
  if (rows.empty()) return Mat();
  Mat m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw ValidationError(at_index(field, r), "ragged matrix");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

/// Array of columns (each arm's vector).
Mat read_columns(const Json& j, const std::string& field) {
  Mat rows = read_mat(j, field);
  return rows.transpose();
}

Json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json rows_json(const Mat& m) {
  Json out = Json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(vec_json(m.row(r).transpose()));
  return out;
}

Json columns_json(const Mat& m) { return rows_json(m.transpose()); }

template <typename T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string match_name(Scripted::Entry::Match m) {
  using M = Scripted::Entry::Match;
  switch (m) {
    case M::Even: return "even";
    case M::Odd: return "odd";
    case M::Every: return "every";
    case M::Round: return "round";
  }
  return "every";
}

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

EnvironmentSpec parse_environment(const Json& j, const std::string& base_dir) {
  const std::string f = "environment";
  check_keys(j, f, {"dim", "num_arms", "horizon", "theta_star", "noise", "contexts", "s_bound"});
  EnvironmentSpec env;

  const Json ctx = j.value("contexts", Json::object());
  const std::string cf = join(f, "contexts");
  require_object(ctx, cf);
  const std::string type = get_or<std::string>(ctx, "type", cf, "synthetic");
  if (type == "file") {
    check_keys(ctx, cf, {"type", "path"});
    const auto path = get_opt<std::string>(ctx, "path", cf);
    if (!path) throw ValidationError(join(cf, "path"), "required for file contexts");
    std::filesystem::path p(*path);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    try {
      env = read_instance_file(p.string());
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError(join(cf, "path"), e.what());
    }
  } else if (type == "explicit") {
    check_keys(ctx, cf, {"type", "rounds"});
    if (!ctx.contains("rounds")) throw ValidationError(join(cf, "rounds"), "required");
    const Json& rounds = ctx.at("rounds");
    if (!rounds.is_array()) throw ValidationError(join(cf, "rounds"), "expected an array");
    ExplicitContexts ex;
    for (std::size_t t = 0; t < rounds.size(); ++t) {
      ex.contexts.push_back(read_columns(rounds[t], at_index(join(cf, "rounds"), t)));
    }
    if (!ex.contexts.empty()) {
      env.horizon = static_cast<int>(ex.contexts.size());
      env.dim = static_cast<int>(ex.contexts.front().rows());
      env.num_arms = static_cast<int>(ex.contexts.front().cols());
    }
    env.contexts = std::move(ex);
  } else if (type == "synthetic") {
    check_keys(ctx, cf, {"type", "min_gap", "max_resamples", "arm_features"});
    SyntheticContexts syn;
    syn.min_gap = get_or(ctx, "min_gap", cf, syn.min_gap);
    syn.max_resamples = get_or(ctx, "max_resamples", cf, syn.max_resamples);
    if (ctx.contains("arm_features") && !ctx.at("arm_features").is_null()) {
      syn.arm_features = read_columns(ctx.at("arm_features"), join(cf, "arm_features"));
    }
    env.contexts = std::move(syn);
  } else {
    throw ValidationError(join(cf, "type"), "unknown context type '" + type + "'");
  }

  env.dim = get_or(j, "dim", f, env.dim);
  env.num_arms = get_or(j, "num_arms", f, env.num_arms);
  env.horizon = get_or(j, "horizon", f, env.horizon);
  if (j.contains("theta_star") && !j.at("theta_star").is_null()) {
    env.theta_star = read_vec(j.at("theta_star"), join(f, "theta_star"));
  }
  if (auto s = get_opt<double>(j, "s_bound", f)) env.s_bound = s;
  if (j.contains("noise")) {
    const std::string nf = join(f, "noise");
    const Json& n = j.at("noise");
    check_keys(n, nf, {"kind", "sigma"});
    const std::string kind = get_or<std::string>(n, "kind", nf, "gaussian");
    try {
      env.noise.kind = parse_noise_kind(kind);
    } catch (const std::exception& e) {
      throw ValidationError(join(nf, "kind"), e.what());
    }
    env.noise.sigma = env.noise.kind == NoiseModel::Kind::Gaussian
                          ? get_or(n, "sigma", nf, 0.1)
                          : 0.0;
  }
  env.validate();
  return env;
}

MechanismConfig parse_mechanism(const Json& j, const std::string& f) {
  check_keys(j, f, {"kind", "label", "lambda", "delta", "s_bound", "bonus", "smoothing",
                    "ic_tolerance", "tie_break_seed"});
  MechanismConfig m;
  if (!j.contains("kind")) throw ValidationError(join(f, "kind"), "required");
  const std::string kind = read<std::string>(j.at("kind"), join(f, "kind"));
  try {
    m.kind = parse_mechanism_kind(kind);
  } catch (const std::exception&) {
    throw ValidationError(join(f, "kind"), "unknown mechanism '" + kind + "'");
  }
  const std::string bonus = get_or<std::string>(j, "bonus", f, to_string(m.bonus));
  try {
    m.bonus = parse_bonus_form(bonus);
  } catch (const std::exception&) {
    throw ValidationError(join(f, "bonus"), "unknown bonus form '" + bonus + "'");
  }
  m.label = get_or<std::string>(j, "label", f, "");
  m.lambda = get_or(j, "lambda", f, m.lambda);
  m.delta = get_opt<double>(j, "delta", f);
  m.s_bound = get_opt<double>(j, "s_bound", f);
  m.smoothing = get_or(j, "smoothing", f, m.smoothing);
  m.ic_tolerance = get_or(j, "ic_tolerance", f, m.ic_tolerance);
  m.tie_break_seed = get_opt<std::uint64_t>(j, "tie_break_seed", f);
  if (!(m.lambda > 0.0)) throw ValidationError(join(f, "lambda"), "must be positive");
  if (m.delta && !(*m.delta > 0.0 && *m.delta <= 1.0)) {
    throw ValidationError(join(f, "delta"), "must lie in (0, 1]");
  }
  if (m.s_bound && !(*m.s_bound >= 0.0)) {
    throw ValidationError(join(f, "s_bound"), "must be nonnegative");
  }
  if (!(m.ic_tolerance >= 0.0)) throw ValidationError(join(f, "ic_tolerance"), "negative");
  return m;
}

Strategy parse_strategy(const Json& j, const std::string& f) {
  require_object(j, f);
  if (!j.contains("strategy")) throw ValidationError(join(f, "strategy"), "required");
  const std::string kind = read<std::string>(j.at("strategy"), join(f, "strategy"));

  if (kind == "truthful") {
    check_keys(j, f, {"strategy"});
    return Truthful{};
  }
  if (kind == "myopic") {
    check_keys(j, f, {"strategy", "inner_iters", "step", "restarts", "seed"});
    Myopic s;
    s.inner_iters = get_or(j, "inner_iters", f, s.inner_iters);
    s.step = get_or(j, "step", f, s.step);
    s.restarts = get_or(j, "restarts", f, s.restarts);
    s.seed = get_opt<std::uint64_t>(j, "seed", f);
    if (s.inner_iters < 0 || s.restarts < 1 || !(s.step > 0.0)) {
      throw ValidationError(f, "myopic needs inner_iters >= 0, restarts >= 1, step > 0");
    }
    return s;
  }
  if (kind == "epoch_gradient") {
    check_keys(j, f, {"strategy", "initial_y", "step", "perturbation", "seed"});
    EpochGradient s;
    if (j.contains("initial_y") && !j.at("initial_y").is_null()) {
      s.initial_y = read_vec(j.at("initial_y"), join(f, "initial_y"));
    }
    s.step = get_or(j, "step", f, s.step);
    s.perturbation = get_or(j, "perturbation", f, s.perturbation);
    s.seed = get_opt<std::uint64_t>(j, "seed", f);
    if (!(s.step >= 0.0) || !(s.perturbation > 0.0)) {
      throw ValidationError(f, "epoch_gradient needs step >= 0 and perturbation > 0");
    }
    return s;
  }
  if (kind == "scripted" || kind == "under_reporter") {
    check_keys(j, f, {"strategy", "script"});
    Scripted s;
    const std::string sf = join(f, "script");
    const Json script = j.value("script", Json::array());
    if (!script.is_array()) throw ValidationError(sf, "expected an array");
    for (std::size_t k = 0; k < script.size(); ++k) {
      const std::string ef = at_index(sf, k);
      check_keys(script[k], ef, {"match", "round", "value"});
      Scripted::Entry e;
      const std::string match = get_or<std::string>(script[k], "match", ef, "every");
      using M = Scripted::Entry::Match;
      if (match == "even") {
        e.match = M::Even;
      } else if (match == "odd") {
        e.match = M::Odd;
      } else if (match == "every") {
        e.match = M::Every;
      } else if (match == "round") {
        e.match = M::Round;
        if (!script[k].contains("round")) throw ValidationError(join(ef, "round"), "required");
      } else {
        throw ValidationError(join(ef, "match"), "unknown match '" + match + "'");
      }
      e.round = get_or(script[k], "round", ef, 0);
      e.value = get_opt<double>(script[k], "value", ef);
      s.script.push_back(e);
    }
    return s;
  }
  if (kind == "linear_realizable") {
    check_keys(j, f, {"strategy", "rotation", "rotation_seed"});
    LinearRealizable s;
    if (j.contains("rotation") && !j.at("rotation").is_null()) {
      s.rotation = read_mat(j.at("rotation"), join(f, "rotation"));
      const Mat gram = s.rotation.transpose() * s.rotation;
      if (s.rotation.rows() != s.rotation.cols() ||
          !gram.isApprox(Mat::Identity(gram.rows(), gram.cols()), 1e-9)) {
        throw ValidationError(join(f, "rotation"), "must be a square orthogonal matrix");
      }
    }
    s.rotation_seed = get_opt<std::uint64_t>(j, "rotation_seed", f);
    return s;
  }
  if (kind == "random_overreport") {
    check_keys(j, f, {"strategy", "probability", "seed"});
    RandomOverreport s;
    s.probability = get_or(j, "probability", f, s.probability);
    s.seed = get_opt<std::uint64_t>(j, "seed", f);
    if (!(s.probability >= 0.0 && s.probability <= 1.0)) {
      throw ValidationError(join(f, "probability"), "must lie in [0, 1]");
    }
    return s;
  }
  if (kind == "budgeted_overreport") {
    check_keys(j, f, {"strategy", "budget_fraction"});
    BudgetedOverreport s;
    s.budget_fraction = get_or(j, "budget_fraction", f, s.budget_fraction);
    if (!(s.budget_fraction >= 0.0)) {
      throw ValidationError(join(f, "budget_fraction"), "must be nonnegative");
    }
    return s;
  }
  if (kind == "fixed") {
    check_keys(j, f, {"strategy", "reports"});
    FixedSequence s;
    const std::string rf = join(f, "reports");
    const Json reports = j.value("reports", Json::array());
    if (!reports.is_array()) throw ValidationError(rf, "expected an array");
    for (std::size_t t = 0; t < reports.size(); ++t) {
      s.reports.push_back(read_vec(reports[t], at_index(rf, t)));
    }
    return s;
  }
  throw ValidationError(join(f, "strategy"), "unknown strategy '" + kind + "'");
}

void ExperimentConfig::validate() const {
  environment.validate();
  if (mechanisms.empty()) throw ValidationError("mechanisms", "at least one mechanism");
  if (static_cast<int>(arms.size()) != environment.num_arms) {
    throw ValidationError("arms", "expected " + std::to_string(environment.num_arms) +
                                      " strategies, got " + std::to_string(arms.size()));
  }
  if (experiment.epochs < 1) throw ValidationError("experiment.epochs", "must be >= 1");
  if (experiment.runs < 1) throw ValidationError("experiment.runs", "must be >= 1");
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (const auto* s = std::get_if<EpochGradient>(&arms[i].get())) {
      if (s->initial_y && s->initial_y->size() != environment.dim) {
        throw ValidationError(at_index("arms", i) + ".initial_y", "wrong dimension");
      }
    }
    if (const auto* s = std::get_if<LinearRealizable>(&arms[i].get())) {
      if (s->rotation.size() != 0 && s->rotation.rows() != environment.dim) {
        throw ValidationError(at_index("arms", i) + ".rotation", "must be dim x dim");
      }
    }
  }
  if (check_ne) {
    if (check_ne->arm < 0 || check_ne->arm >= environment.num_arms) {
      throw ValidationError("check_ne.arm", "out of range");
    }
    if (check_ne->method == DeviationMethod::MonteCarlo && check_ne->runs < 2) {
      throw ValidationError("check_ne.runs", "monte carlo needs at least 2 runs");
    }
  }
}

ExperimentConfig parse_config(const Json& j, const std::string& base_dir) {
  check_keys(j, "", {"environment", "mechanism", "mechanisms", "arms", "experiment",
                     "instrument", "check_ne"});
  ExperimentConfig c;
  c.environment = parse_environment(j.value("environment", Json::object()), base_dir);

  if (j.contains("mechanism") && j.contains("mechanisms")) {
    throw ValidationError("mechanisms", "give either 'mechanism' or 'mechanisms'");
  }
  if (j.contains("mechanism")) {
    c.mechanisms.push_back(parse_mechanism(j.at("mechanism"), "mechanism"));
  } else if (j.contains("mechanisms")) {
    const Json& ms = j.at("mechanisms");
    if (!ms.is_array()) throw ValidationError("mechanisms", "expected an array");
    for (std::size_t k = 0; k < ms.size(); ++k) {
      c.mechanisms.push_back(parse_mechanism(ms[k], at_index("mechanisms", k)));
    }
  }

  // One object applies to every arm; an array gives one per arm.
  const Json arms = j.value("arms", Json{{"strategy", "truthful"}});
  if (arms.is_array()) {
    for (std::size_t i = 0; i < arms.size(); ++i) {
      c.arms.push_back(parse_strategy(arms[i], at_index("arms", i)));
    }
  } else {
    const Strategy s = parse_strategy(arms, "arms");
    if (c.environment.num_arms < 1) {
      throw ValidationError("environment.num_arms", "must be >= 1");
    }
    c.arms.assign(c.environment.num_arms, s);
  }

  if (j.contains("experiment")) {
    const Json& e = j.at("experiment");
    check_keys(e, "experiment", {"epochs", "runs", "master_seed"});
    c.experiment.epochs = get_or(e, "epochs", "experiment", c.experiment.epochs);
    c.experiment.runs = get_or(e, "runs", "experiment", c.experiment.runs);
    c.experiment.master_seed =
        get_or<std::uint64_t>(e, "master_seed", "experiment", c.experiment.master_seed);
  }
  c.instrument = get_or(j, "instrument", "", false);

  if (j.contains("check_ne") && !j.at("check_ne").is_null()) {
    const Json& n = j.at("check_ne");
    const std::string f = "check_ne";
    check_keys(n, f, {"arm", "menu", "runs", "method"});
    CheckNeConfig ne;
    ne.arm = get_or(n, "arm", f, ne.arm);
    ne.runs = get_or(n, "runs", f, ne.runs);
    const std::string method = get_or<std::string>(n, "method", f, "monte_carlo");
    if (method == "monte_carlo") {
      ne.method = DeviationMethod::MonteCarlo;
    } else if (method == "exact_oracle") {
      ne.method = DeviationMethod::ExactOracle;
    } else {
      throw ValidationError(join(f, "method"), "unknown method '" + method + "'");
    }
    const Json menu = n.value("menu", Json::array());
    if (!menu.is_array()) throw ValidationError(join(f, "menu"), "expected an array");
    for (std::size_t k = 0; k < menu.size(); ++k) {
      const std::string mf = at_index(join(f, "menu"), k);
      require_object(menu[k], mf);
      Json body = menu[k];
      std::string label = body.value("label", "");
      body.erase("label");
      Strategy s = parse_strategy(body, mf);
      if (label.empty()) label = s.kind();
      ne.menu.push_back({label, std::move(s)});
    }
    c.check_ne = std::move(ne);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config(j, parent.empty() ? "." : parent.string());
}

Json to_json(const EnvironmentSpec& env) {
  Json j;
  j["dim"] = env.dim;
  j["num_arms"] = env.num_arms;
  j["horizon"] = env.horizon;
  j["theta_star"] = env.theta_star ? vec_json(*env.theta_star) : Json(nullptr);
  j["s_bound"] = opt_json(env.s_bound);
  j["noise"] = {{"kind", to_string(env.noise.kind)}, {"sigma", env.noise.sigma}};
  if (const auto* syn = std::get_if<SyntheticContexts>(&env.contexts)) {
    j["contexts"] = {{"type", "synthetic"},
                     {"min_gap", syn->min_gap},
                     {"max_resamples", syn->max_resamples},
                     {"arm_features",
                      syn->arm_features ? columns_json(*syn->arm_features) : Json(nullptr)}};
  } else {
    const auto& ex = std::get<ExplicitContexts>(env.contexts);
    Json rounds = Json::array();
    for (const Mat& m : ex.contexts) rounds.push_back(columns_json(m));
    j["contexts"] = {{"type", "explicit"}, {"rounds", std::move(rounds)}};
  }
  return j;
}

Json to_json(const MechanismConfig& m) {
  return {{"kind", to_string(m.kind)},
          {"label", m.label},
          {"lambda", m.lambda},
          {"delta", opt_json(m.delta)},
          {"s_bound", opt_json(m.s_bound)},
          {"bonus", to_string(m.bonus)},
          {"smoothing", m.smoothing},
          {"ic_tolerance", m.ic_tolerance},
          {"tie_break_seed", opt_json(m.tie_break_seed)}};
}

Json to_json(const Strategy& strategy) {
  Json j{{"strategy", strategy.kind()}};
  std::visit(Overloaded{
                 [](const Truthful&) {},
                 [&](const Myopic& s) {
                   j["inner_iters"] = s.inner_iters;
                   j["step"] = s.step;
                   j["restarts"] = s.restarts;
                   j["seed"] = opt_json(s.seed);
                 },
                 [&](const EpochGradient& s) {
                   j["initial_y"] = s.initial_y ? vec_json(*s.initial_y) : Json(nullptr);
                   j["step"] = s.step;
                   j["perturbation"] = s.perturbation;
                   j["seed"] = opt_json(s.seed);
                 },
                 [&](const Scripted& s) {
                   Json script = Json::array();
                   for (const auto& e : s.script) {
                     script.push_back({{"match", match_name(e.match)},
                                       {"round", e.round},
                                       {"value", opt_json(e.value)}});
                   }
                   j["script"] = std::move(script);
                 },
                 [&](const LinearRealizable& s) {
                   j["rotation"] = s.rotation.size() ? rows_json(s.rotation) : Json(nullptr);
                   j["rotation_seed"] = opt_json(s.rotation_seed);
                 },
                 [&](const RandomOverreport& s) {
                   j["probability"] = s.probability;
                   j["seed"] = opt_json(s.seed);
                 },
                 [&](const BudgetedOverreport& s) { j["budget_fraction"] = s.budget_fraction; },
                 [&](const FixedSequence& s) {
                   Json reports = Json::array();
                   for (const Vec& x : s.reports) reports.push_back(vec_json(x));
                   j["reports"] = std::move(reports);
                 },
             },
             strategy.get());
  return j;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["environment"] = to_json(c.environment);
  Json ms = Json::array();
  for (const auto& m : c.mechanisms) ms.push_back(to_json(m));
  j["mechanisms"] = std::move(ms);
  Json arms = Json::array();
  for (const auto& s : c.arms) arms.push_back(to_json(s));
  j["arms"] = std::move(arms);
  j["experiment"] = {{"epochs", c.experiment.epochs},
                     {"runs", c.experiment.runs},
                     {"master_seed", c.experiment.master_seed}};
  j["instrument"] = c.instrument;
  if (c.check_ne) {
    Json menu = Json::array();
    for (const auto& d : c.check_ne->menu) {
      Json e = to_json(d.strategy);
      e["label"] = d.label;
      menu.push_back(std::move(e));
    }
    j["check_ne"] = {{"arm", c.check_ne->arm},
                     {"menu", std::move(menu)},
                     {"runs", c.check_ne->runs},
                     {"method", to_string(c.check_ne->method)}};
  } else {
    j["check_ne"] = nullptr;
  }
  return j;
}

std::string config_fingerprint(const ExperimentConfig& config) {
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace slcb
