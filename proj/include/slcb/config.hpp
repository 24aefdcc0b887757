#pragma once

#include "slcb/arms.hpp"
#include "slcb/environment.hpp"
#include "slcb/mechanism.hpp"
#include "slcb/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace slcb {

using Json = nlohmann::json;

struct ExperimentSettings {
  int epochs = 1;
  int runs = 1;
  std::uint64_t master_seed = 0;
};

struct CheckNeConfig {
  int arm = 0;
  std::vector<Deviation> menu;
  int runs = 1000;
  DeviationMethod method = DeviationMethod::MonteCarlo;
};

/// Everything one invocation of the CLI runs.
struct ExperimentConfig {
  EnvironmentSpec environment;
  /// Compared on common seeds.
  std::vector<MechanismConfig> mechanisms;
  /// One strategy per arm.
  std::vector<Strategy> arms;
  ExperimentSettings experiment;
  bool instrument = false;
  std::optional<CheckNeConfig> check_ne;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Parses and validates. Relative instance-file paths resolve against `base_dir`.
ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Canonical form: every field explicit, so parse_config(to_json(c)) == c.
Json to_json(const ExperimentConfig& config);
Json to_json(const EnvironmentSpec& env);
Json to_json(const MechanismConfig& mechanism);
Json to_json(const Strategy& strategy);

EnvironmentSpec parse_environment(const Json& j, const std::string& base_dir = ".");
MechanismConfig parse_mechanism(const Json& j, const std::string& field = "mechanism");
Strategy parse_strategy(const Json& j, const std::string& field = "arms");

/// 16 hex digits: FNV-1a of the canonical JSON dump.
std::string config_fingerprint(const ExperimentConfig& config);

}  // namespace slcb
