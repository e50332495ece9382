#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfbounds/experiments.hpp"
#include "mfbounds/serialize.hpp"

namespace mfb {

inline constexpr int kSchemaVersion = 1;

struct TargetSpec {
  std::string payoff;           // pattern, may contain "{K}"
  std::vector<double> strikes;  // empty: payoff is literal
};

struct PricingConfig {
  std::size_t samples = 1'000'000;
  /// "copula": Monte Carlo on the continuous market; "discrete": exact on the oracle grid.
  std::string measure = "copula";
};

struct OracleConfig {
  std::vector<int> grid;  // atoms per asset; empty means 50 per asset
  std::size_t max_variables = 1'000'000;
  std::size_t coupling_samples = 2'000'000;

  std::vector<int> grid_for(int dimension) const;
};

/// One user-declared case: `extends` names an earlier case whose constraints it inherits.
struct CaseConfig {
  std::string name;
  std::string extends;
  std::vector<ConstraintFamily> constraints;
};

struct ExperimentConfig {
  std::string bundle;              // a built-in bundle, or empty
  std::vector<CaseConfig> cases;   // user cases over the config's market and target
  std::optional<double> convergence_strike;
};

struct TimingConfig {
  std::vector<int> dims{3, 6, 12};
  std::int64_t iterations = 5'000;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  Seed seed = 20240501;
  int threads = 1;
  std::string output_dir = "out";
  std::optional<MarketSpec> market;
  ReferenceKind reference = ReferenceKind::Product;
  std::optional<TargetSpec> target;
  std::vector<ConstraintFamily> constraints;
  TrainerConfig trainer;
  PricingConfig pricing;
  OracleConfig oracle;
  ExperimentConfig experiment;
  TimingConfig timing;

  const MarketSpec& require_market() const;
  const TargetSpec& require_target() const;
};

/// Throws ErrorKind::Config on unknown keys, wrong types or a newer schema.
RunConfig config_from_json(const json& j);
json to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// The experiment cases a config describes: a built-in bundle, or its own cases.
ExperimentBundle resolve_experiment(const RunConfig& config);

/// The reference measure the config selects for training.
ReferenceMeasure make_reference(const RunConfig& config);

}  // namespace mfb
