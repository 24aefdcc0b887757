// slcb: run strategic contextual bandit experiments.
//
//   slcb run --config exp.json --out results/ [--jobs N] [--seed S] [--instrument]
//   slcb check-ne --config ne.json --out results/
//   slcb emit-plotdata results/ [more_results/ ...] --out plotdata/
//   slcb validate --config exp.json
//
// Exit status: 0 ok, 1 invalid config or inputs, 2 runtime failure.

#include "slcb/config.hpp"
#include "slcb/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <thread>

namespace {

struct Common {
  std::string config;
  std::string out = "results";
  int jobs = 0;
  std::optional<std::uint64_t> seed;
  bool instrument = false;
};

slcb::ExperimentConfig load(const Common& c) {
  slcb::ExperimentConfig cfg = slcb::load_config(c.config);
  if (c.seed) cfg.experiment.master_seed = *c.seed;
  if (c.instrument) cfg.instrument = true;
  return cfg;
}

int jobs_or_default(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategic linear contextual bandit simulations"};
  app.require_subcommand(1);

  Common run_opts, ne_opts, val_opts;
  auto add_common = [](CLI::App* sub, Common& c, bool with_run_flags) {
    sub->add_option("--config", c.config, "Experiment config (JSON)")->required();
    if (!with_run_flags) return;
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--jobs", c.jobs, "Parallel simulations (default: all cores)");
    sub->add_option("--seed", c.seed, "Override experiment.master_seed");
    sub->add_flag("--instrument", c.instrument,
                  "Check reporting assumptions and the manipulation bound at runtime");
  };
  CLI::App* run = app.add_subcommand("run", "Run all mechanisms x runs x epochs");
  add_common(run, run_opts, true);
  CLI::App* ne = app.add_subcommand("check-ne", "Estimate deviation gains over a strategy menu");
  add_common(ne, ne_opts, true);
  CLI::App* validate = app.add_subcommand("validate", "Parse a config and print its fingerprint");
  add_common(validate, val_opts, false);

  std::vector<std::string> plot_inputs;
  std::string plot_out = "plotdata";
  CLI::App* plot = app.add_subcommand("emit-plotdata", "Aggregate results into plot-ready CSVs");
  plot->add_option("results", plot_inputs, "Results directories")->required();
  plot->add_option("--out", plot_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      slcb::cmd_run(load(run_opts), run_opts.out, jobs_or_default(run_opts.jobs), std::cout);
    } else if (*ne) {
      slcb::cmd_check_ne(load(ne_opts), ne_opts.out, jobs_or_default(ne_opts.jobs), std::cout);
    } else if (*validate) {
      const slcb::ExperimentConfig cfg = load(val_opts);
      std::cout << "ok " << slcb::config_fingerprint(cfg) << "\n";
    } else if (*plot) {
      slcb::cmd_emit_plotdata(plot_inputs, plot_out, std::cout);
    }
  } catch (const slcb::ValidationError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
