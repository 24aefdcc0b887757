#include "slcb/io.hpp"

#include "slcb/metrics.hpp"
#include "slcb/random.hpp"
#include "slcb/simulator.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace slcb {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFingerprintPrefix = "# config_fingerprint=";
constexpr const char* kRoundsHeader =
    "mechanism,run,epoch,t,arm,reward,instantaneous_regret,cumulative_regret,active_count,"
    "manipulation_this_round";

void append_number(std::string& out, double v) { out += format_number(v); }

void append_int(std::string& out, long long v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("results", "missing input '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json instrumentation_json(const Instrumentation& ins, const std::vector<ArmSummary>& arms) {
  Json a1 = Json::array(), a2 = Json::array();
  for (const auto& a : arms) {
    a1.push_back(a.value_underreports);
    a2.push_back(a.score_below_truth);
  }
  Json j{{"value_underreports", a1}, {"score_below_truth", a2}};
  if (ins.bound_checks > 0) {
    j["noise_in_band"] = ins.noise_in_band;
    j["bound_checks"] = ins.bound_checks;
    j["bound_violations"] = ins.bound_violations;
    j["bound_max_excess"] = ins.bound_max_excess;
  }
  return j;
}

struct JobResult {
  Json epochs = Json::array();
  std::vector<double> regret_by_epoch;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_num(std::string_view s, const std::string& where) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(where, "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::string fingerprint_line(const std::string& fp) { return kFingerprintPrefix + fp + "\n"; }

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void cmd_run(const ExperimentConfig& config, const std::string& out_dir, int jobs,
             std::ostream& log) {
  config.validate();
  const fs::path out(out_dir);
  fs::create_directories(out);
  const fs::path parts = out / ".rounds_parts";
  fs::create_directories(parts);

  const std::string fp = config_fingerprint(config);
  const std::size_t M = config.mechanisms.size();
  const std::size_t R = static_cast<std::size_t>(config.experiment.runs);
  const RunOptions options{config.instrument, false};

  const std::function<JobResult(std::size_t)> job = [&](std::size_t k) {
    const MechanismConfig& mech = config.mechanisms[k / R];
    const std::size_t run = k % R;
    const std::uint64_t master = derive_seed(config.experiment.master_seed, Stream::Run, run);
    const std::string name = csv_field(mech.name());
    std::ofstream part(parts / (std::to_string(k) + ".csv"), std::ios::binary);
    if (!part) throw Error("cannot write round log part");

    JobResult result;
    std::string buf;
    run_epochs(config.environment, mech, config.arms, config.experiment.epochs, master, options,
               [&](const SimulationLog& l) {
                 const RegretSeries reg = strategic_regret(l);
                 buf.clear();
                 for (const RoundRecord& rec : l.rounds) {
                   buf += name;
                   buf += ',';
                   append_int(buf, static_cast<long long>(run));
                   buf += ',';
                   append_int(buf, l.epoch);
                   buf += ',';
                   append_int(buf, rec.t);
                   buf += ',';
                   append_int(buf, rec.arm);
                   buf += ',';
                   append_number(buf, rec.reward);
                   buf += ',';
                   append_number(buf, reg.instantaneous[rec.t]);
                   buf += ',';
                   append_number(buf, reg.cumulative[rec.t]);
                   buf += ',';
                   append_int(buf, rec.active_count);
                   buf += ',';
                   append_number(buf, rec.manipulation);
                   buf += '\n';
                 }
                 part << buf;

                 Json pulls = Json::array(), tau = Json::array(), elim = Json::array(),
                      manip = Json::array();
                 for (const ArmSummary& a : l.arms) {
                   pulls.push_back(a.pulls);
                   tau.push_back(a.tau);
                   elim.push_back(a.eliminated_at ? Json(*a.eliminated_at) : Json(nullptr));
                   manip.push_back(a.manipulation);
                 }
                 Json e{{"epoch", l.epoch},
                        {"regret", reg.total},
                        {"pulls", pulls},
                        {"tau", tau},
                        {"eliminated_at", elim},
                        {"manipulation", manipulation_mass(l)},
                        {"manipulation_by_arm", manip},
                        {"empty_rounds", l.empty_rounds},
                        {"instance_fingerprint", l.fingerprint}};
                 if (config.instrument) {
                   e["instrumentation"] = instrumentation_json(l.instrumentation, l.arms);
                 }
                 result.epochs.push_back(std::move(e));
                 result.regret_by_epoch.push_back(reg.total);
               });
    if (!part) throw Error("write failed for round log part");
    return result;
  };
  const auto results = run_batch<JobResult>(M * R, jobs, job, [&](std::size_t k) {
    return "mechanism=" + config.mechanisms[k / R].name() + " run=" + std::to_string(k % R);
  });

  {
    std::ofstream rounds(out / "rounds.csv", std::ios::binary);
    if (!rounds) throw Error("cannot write rounds.csv");
    rounds << fingerprint_line(fp) << kRoundsHeader << '\n';
    for (std::size_t k = 0; k < M * R; ++k) {
      const fs::path p = parts / (std::to_string(k) + ".csv");
      std::ifstream in(p, std::ios::binary);
      rounds << in.rdbuf();
    }
    if (!rounds) throw Error("write failed for rounds.csv");
  }
  fs::remove_all(parts);

  Json runs = Json::array();
  Json aggregate = Json::object();
  for (std::size_t m = 0; m < M; ++m) {
    const std::string name = config.mechanisms[m].name();
    Json by_epoch = Json::array();
    for (int e = 0; e < config.experiment.epochs; ++e) {
      std::vector<double> values;
      for (std::size_t r = 0; r < R; ++r) values.push_back(results[m * R + r].regret_by_epoch[e]);
      const Summary s = summarize(values);
      by_epoch.push_back({{"epoch", e}, {"mean", s.mean}, {"stderr", s.std_error}});
    }
    aggregate[name] = {{"regret_by_epoch", by_epoch}};
    for (std::size_t r = 0; r < R; ++r) {
      runs.push_back({{"mechanism", name},
                      {"run", r},
                      {"master_seed", derive_seed(config.experiment.master_seed, Stream::Run, r)},
                      {"epochs", results[m * R + r].epochs}});
    }
    const Summary last = summarize([&] {
      std::vector<double> v;
      for (std::size_t r = 0; r < R; ++r) v.push_back(results[m * R + r].regret_by_epoch.back());
      return v;
    }());
    log << name << ": final-epoch regret " << format_number(last.mean) << " +- "
        << format_number(last.std_error) << " over " << R << " run(s)\n";
  }
  Json mech_names = Json::array();
  for (const auto& m : config.mechanisms) mech_names.push_back(m.name());
  const Json summary{{"config_fingerprint", fp},
                     {"mechanisms", mech_names},
                     {"epochs", config.experiment.epochs},
                     {"num_runs", R},
                     {"num_arms", config.environment.num_arms},
                     {"horizon", config.environment.horizon},
                     {"runs", runs},
                     {"aggregate", aggregate}};
  write_file(out / "summary.json", summary.dump(2) + "\n");
  Json echo = to_json(config);
  echo["config_fingerprint"] = fp;
  write_file(out / "config_echo.json", echo.dump(2) + "\n");
}

void cmd_check_ne(const ExperimentConfig& config, const std::string& out_dir, int jobs,
                  std::ostream& log) {
  config.validate();
  if (!config.check_ne) throw ValidationError("check_ne", "required for check-ne");
  const CheckNeConfig& ne = *config.check_ne;
  const std::string fp = config_fingerprint(config);

  Json reports = Json::array();
  log << std::left << std::setw(14) << "mechanism" << std::setw(22) << "strategy"
      << std::setw(26) << "utility" << "gain\n";
  for (const MechanismConfig& mech : config.mechanisms) {
    DeviationReport rep;
    if (ne.method == DeviationMethod::MonteCarlo) {
      rep = deviation_gain(config.environment, mech, config.arms, ne.arm, ne.menu, ne.runs,
                           config.experiment.master_seed, jobs);
    } else {
      const TrueContextSequence inst =
          generate_instance(config.environment, config.experiment.master_seed);
      rep = exact_deviation_gain(inst, mech, config.arms, ne.arm, ne.menu,
                                 config.experiment.master_seed);
    }
    auto row = [&](const std::string& label, double u, double se, const std::string& gain) {
      log << std::left << std::setw(14) << mech.name() << std::setw(22) << label << std::setw(26)
          << (format_number(u) + " +- " + format_number(se)) << gain << '\n';
    };
    row("(baseline)", rep.baseline_utility, rep.baseline_std_error, "-");
    Json devs = Json::array();
    for (const DeviationOutcome& d : rep.deviations) {
      row(d.label, d.utility, d.std_error,
          format_number(d.gain) + " +- " + format_number(d.gain_std_error));
      devs.push_back({{"label", d.label},
                      {"utility", d.utility},
                      {"stderr", d.std_error},
                      {"gain", d.gain},
                      {"gain_stderr", d.gain_std_error}});
    }
    log << "  -> best gain " << format_number(rep.gain) << " +- "
        << format_number(rep.gain_std_error) << " ("
        << (rep.best >= 0 ? rep.deviations[rep.best].label : std::string("baseline")) << ")\n";
    reports.push_back({{"mechanism", mech.name()},
                       {"arm", rep.arm},
                       {"method", to_string(rep.method)},
                       {"num_runs", rep.num_runs},
                       {"baseline_utility", rep.baseline_utility},
                       {"baseline_stderr", rep.baseline_std_error},
                       {"deviations", devs},
                       {"best", rep.best >= 0 ? Json(rep.deviations[rep.best].label) : Json(nullptr)},
                       {"gain", rep.gain},
                       {"gain_stderr", rep.gain_std_error}});
  }
  fs::create_directories(out_dir);
  const Json doc{{"config_fingerprint", fp}, {"reports", reports}};
  write_file(fs::path(out_dir) / "ne_report.json", doc.dump(2) + "\n");
}

void cmd_emit_plotdata(const std::vector<std::string>& results_dirs, const std::string& out_dir,
                       std::ostream& log) {
  if (results_dirs.empty()) throw ValidationError("results", "no results directory given");

  std::string fp;
  auto check_fp = [&fp](const std::string& seen, const std::string& where) {
    if (fp.empty()) fp = seen;
    if (seen != fp) {
      throw ValidationError("results", "mixed config fingerprints (" + fp + " vs " + seen +
                                           " in " + where + ")");
    }
  };

  // (mechanism, run, epoch) -> epoch entry
  std::vector<std::string> mech_order;
  std::map<std::string, std::map<long, std::map<int, Json>>> epochs;
  int last_epoch = 0;
  int num_arms = 0;
  for (const std::string& dir : results_dirs) {
    const fs::path summary_path = fs::path(dir) / "summary.json";
    Json summary;
    try {
      summary = Json::parse(read_file(summary_path));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("results", summary_path.string() + ": " + e.what());
    }
    check_fp(summary.value("config_fingerprint", ""), summary_path.string());
    num_arms = summary.value("num_arms", 0);
    for (const Json& run : summary.at("runs")) {
      const std::string mech = run.at("mechanism").get<std::string>();
      if (std::find(mech_order.begin(), mech_order.end(), mech) == mech_order.end()) {
        mech_order.push_back(mech);
      }
      const long r = run.at("run").get<long>();
      for (const Json& e : run.at("epochs")) {
        const int epoch = e.at("epoch").get<int>();
        last_epoch = std::max(last_epoch, epoch);
        if (!epochs[mech][r].emplace(epoch, e).second) {
          throw ValidationError("results", "duplicate run " + std::to_string(r) + " of " + mech);
        }
      }
    }
  }

  // (mechanism, which) -> run -> cumulative regret by t; which 0 = epoch 0, 1 = final.
  std::map<std::string, std::map<long, std::vector<double>>> series[2];
  for (const std::string& dir : results_dirs) {
    const fs::path rounds_path = fs::path(dir) / "rounds.csv";
    std::ifstream in(rounds_path, std::ios::binary);
    if (!in) throw ValidationError("results", "missing input '" + rounds_path.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind(kFingerprintPrefix, 0) != 0) {
      throw ValidationError("results", rounds_path.string() + " has no fingerprint line");
    }
    check_fp(line.substr(std::string(kFingerprintPrefix).size()), rounds_path.string());
    std::getline(in, line);  // header
    const std::string where = rounds_path.string();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line);
      if (f.size() != 10) throw ValidationError("results", where + ": malformed row");
      const int epoch = parse_num<int>(f[2], where);
      if (epoch != 0 && epoch != last_epoch) continue;
      const std::string mech(f[0]);
      const long run = parse_num<long>(f[1], where);
      const int t = parse_num<int>(f[3], where);
      const double cum = parse_num<double>(f[7], where);
      for (int which = 0; which < 2; ++which) {
        if (epoch != (which == 0 ? 0 : last_epoch)) continue;
        auto& v = series[which][mech][run];
        if (static_cast<int>(v.size()) <= t) v.resize(t + 1, 0.0);
        v[t] = cum;
      }
    }
  }

  const fs::path out(out_dir);
  fs::create_directories(out);

  std::string by_epoch = fingerprint_line(fp) + "mechanism,epoch,regret_mean,regret_stderr,runs\n";
  std::string mu = fingerprint_line(fp) +
                   "mechanism,epoch,arm,manipulation_mean,manipulation_stderr,pulls_mean,"
                   "pulls_stderr,runs\n";
  for (const std::string& mech : mech_order) {
    const auto& runs = epochs[mech];
    for (int e = 0; e <= last_epoch; ++e) {
      std::vector<double> regret;
      std::vector<std::vector<double>> manip(num_arms), pulls(num_arms);
      for (const auto& [r, by] : runs) {
        const auto it = by.find(e);
        if (it == by.end()) continue;
        regret.push_back(it->second.at("regret").get<double>());
        for (int i = 0; i < num_arms; ++i) {
          manip[i].push_back(it->second.at("manipulation_by_arm").at(i).get<double>());
          pulls[i].push_back(it->second.at("pulls").at(i).get<double>());
        }
      }
      if (regret.empty()) continue;
      const Summary s = summarize(regret);
      by_epoch += csv_field(mech) + "," + std::to_string(e) + "," + format_number(s.mean) + "," +
                  format_number(s.std_error) + "," + std::to_string(s.count) + "\n";
      for (int i = 0; i < num_arms; ++i) {
        const Summary m = summarize(manip[i]);
        const Summary p = summarize(pulls[i]);
        mu += csv_field(mech) + "," + std::to_string(e) + "," + std::to_string(i) + "," +
              format_number(m.mean) + "," + format_number(m.std_error) + "," +
              format_number(p.mean) + "," + format_number(p.std_error) + "," +
              std::to_string(m.count) + "\n";
      }
    }
  }
  write_file(out / "regret_by_epoch.csv", by_epoch);
  write_file(out / "manipulation_and_utility.csv", mu);

  const char* names[2] = {"regret_vs_t_epoch0.csv", "regret_vs_t_final.csv"};
  for (int which = 0; which < 2; ++which) {
    std::string text = fingerprint_line(fp) +
                       "mechanism,epoch,t,cumulative_regret_mean,cumulative_regret_stderr,runs\n";
    const int epoch = which == 0 ? 0 : last_epoch;
    for (const std::string& mech : mech_order) {
      const auto& runs = series[which][mech];
      std::size_t T = 0;
      for (const auto& [r, v] : runs) T = std::max(T, v.size());
      std::vector<double> at_t(runs.size());
      for (std::size_t t = 0; t < T; ++t) {
        std::size_t k = 0;
        for (const auto& [r, v] : runs) at_t[k++] = t < v.size() ? v[t] : 0.0;
        const Summary s = summarize(at_t);
        text += csv_field(mech) + "," + std::to_string(epoch) + "," + std::to_string(t) + "," +
                format_number(s.mean) + "," + format_number(s.std_error) + "," +
                std::to_string(s.count) + "\n";
      }
    }
    write_file(out / names[which], text);
  }
  log << "wrote plot data for " << mech_order.size() << " mechanism(s), " << last_epoch + 1
      << " epoch(s) to " << out.string() << "\n";
}

}  // namespace slcb
