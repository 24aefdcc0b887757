#pragma once

#include "slcb/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace slcb {

/// Locale-independent shortest round-trip formatting.
std::string format_number(double v);

/// Runs every mechanism x run job of the config, each over all epochs, and
/// writes rounds.csv, summary.json and config_echo.json into `out_dir`.
/// Jobs of different mechanisms with the same run index share seeds.
void cmd_run(const ExperimentConfig& config, const std::string& out_dir, int jobs,
             std::ostream& log);

/// Runs the configured deviation analysis for every mechanism, prints a
/// table and writes ne_report.json.
void cmd_check_ne(const ExperimentConfig& config, const std::string& out_dir, int jobs,
                  std::ostream& log);

/// Reads rounds.csv and summary.json from each results directory and
/// writes regret_by_epoch.csv, regret_vs_t_epoch0.csv, regret_vs_t_final.csv
/// and manipulation_and_utility.csv. Refuses inputs with different config
/// fingerprints (ValidationError).
void cmd_emit_plotdata(const std::vector<std::string>& results_dirs, const std::string& out_dir,
                       std::ostream& log);

}  // namespace slcb
