#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mfbounds/dual_solver.hpp"
#include "mfbounds/market.hpp"
#include "mfbounds/pricer.hpp"

namespace mfb {

/// A payoff pattern instantiated at each strike; "{K}" marks the strike.
/// An empty strike list means the pattern is a literal payoff.
struct ConstraintFamily {
  std::string payoff;
  std::vector<double> strikes;

  std::vector<std::string> render() const;
  bool operator==(const ConstraintFamily&) const = default;
};

struct ExperimentCase {
  std::string name;
  std::string parent;  // case whose constraint set this one extends; empty for a root
  MarketSpec market;
  ReferenceKind reference = ReferenceKind::Product;
  std::vector<ConstraintFamily> constraints;  // fully resolved, parent's families first
  std::string target;                         // pattern with "{K}"
  std::vector<double> strikes;
  TrainerConfig trainer;
  std::size_t pricing_samples = 1'000'000;
  Seed seed = 0;

  /// Canonical payoff text of every constraint instrument, in order.
  std::vector<std::string> instrument_texts() const;
};

struct ExperimentBundle {
  std::string name;
  std::vector<ExperimentCase> cases;
  double convergence_strike = 6.0;
  std::vector<std::string> notes;
};

MarketSpec experiment1_market();
MarketSpec experiment2_market();

/// Known bundles: E1, E1-extended, E2, E2-relevant, E2-desk. Cases of a bundle
/// share `seed` so equal instruments get equal prices and equal strikes share
/// training randomness.
ExperimentBundle make_bundle(const std::string& name, const TrainerConfig& trainer, Seed seed,
                             std::size_t pricing_samples = 1'000'000);
std::vector<std::string> bundle_names();

/// Every experiment case, E1.0-E1.8 and E2.0-E2.8.
ExperimentCase make_case(const std::string& name, const TrainerConfig& trainer, Seed seed,
                         std::size_t pricing_samples = 1'000'000);

/// Throws ErrorKind::Config unless each case with a parent in `cases` contains the
/// parent's constraint families as a prefix.
void validate_nesting(const std::vector<ExperimentCase>& cases);

struct CaseRow {
  double strike = 0.0;
  std::optional<double> upper;
  std::optional<double> lower;
  double reference = 0.0;
  double stderr_ = 0.0;
};

struct CaseTable {
  std::string name;
  std::vector<CaseRow> rows;
  std::vector<PricedInstrument> instruments;
  std::vector<BoundResult> upper_results;
  std::vector<BoundResult> lower_results;
  Seed pricing_seed = 0;
  std::vector<Seed> training_seeds;
  double seconds = 0.0;
};

struct RunOptions {
  bool upper = true;
  bool lower = true;
  int threads = 1;
};

/// Runs jobs on up to `threads` workers; the first failure is rethrown once all finish.
void run_parallel(std::vector<std::function<void()>>& jobs, int threads);

Seed pricing_seed(Seed root);
Seed training_seed(Seed root, double strike);

/// Prices the constraints once, then trains bounds at every target strike.
CaseTable run_case(const ExperimentCase& c, const RunOptions& options = {});

/// The same case at the given strikes only.
CaseTable run_case_at(const ExperimentCase& c, const std::vector<double>& strikes, const RunOptions& options = {});

struct ConvergenceTable {
  double strike = 0.0;
  std::vector<std::string> cases;
  std::vector<std::vector<double>> traces;
  std::vector<double> bounds;
};

ConvergenceTable run_convergence(const std::vector<ExperimentCase>& cases, double strike, int threads = 1);

struct TimingRow {
  int dimension = 0;
  double seconds = 0.0;
  std::int64_t iterations = 0;
  double bound = 0.0;
};

/// Volatilities cycle through the six-asset market's values, correlation 0.4,
/// target a basket call at 10 on all assets with no constraint instruments.
MarketSpec timing_market(int dimension);
std::vector<TimingRow> run_timing(const std::vector<int>& dimensions, const TrainerConfig& trainer);

void write_case_csv(std::ostream& out, const CaseTable& table);
/// Wide table: strike, reference, stderr, then one upper (and lower) column per case.
void write_sweep_csv(std::ostream& out, const std::vector<CaseTable>& tables);
void write_convergence_csv(std::ostream& out, const ConvergenceTable& table, std::size_t stride = 1);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

}  // namespace mfb
