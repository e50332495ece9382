#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mfbounds/dual_solver.hpp"
#include "mfbounds/market.hpp"
#include "mfbounds/payoff.hpp"
#include "mfbounds/pricer.hpp"
#include "mfbounds/simplex.hpp"

namespace mfb {

/// Product grid of quantile atoms. The coupling variables are the grid cells.
struct DiscreteInstance {
  DiscreteMarginals marginals;
  std::size_t max_variables = 1'000'000;

  int dimension() const { return marginals.dimension(); }
  std::size_t cells() const { return marginals.grid_size(); }
  /// Atom indices of `cell` (row-major, asset 1 slowest).
  std::vector<int> cell_atoms(std::size_t cell) const;
};

/// Asset j gets n_j equal-probability atoms at the (k - 0.5)/n_j quantiles.
DiscreteInstance discretize(const MarketSpec& spec, const std::vector<int>& grid_sizes,
                            std::size_t max_variables = 1'000'000);

/// A price constraint with its tolerance band |E[phi] - price| <= tolerance.
struct BandedConstraint {
  PayoffExpr payoff;
  double price = 0.0;
  double tolerance = 0.0;
};

/// max(3 * stderr, 1e-4) for continuous-market prices, 1e-9 for grid-exact prices.
double default_tolerance(const PricedInstrument& instrument);

std::vector<BandedConstraint> banded(const std::vector<PricedInstrument>& instruments);

enum class Optimize { Max, Min };

struct CouplingAtom {
  std::vector<int> atoms;
  double mass = 0.0;
};

struct ActiveConstraint {
  std::size_t index = 0;
  std::string side;  // "equality", "upper" or "lower"
};

struct PrimalResult {
  lp::Status status = lp::Status::IterationLimit;
  double optimum = 0.0;
  std::vector<CouplingAtom> coupling;
  std::vector<ActiveConstraint> active;
  double marginal_residual = 0.0;
  long iterations = 0;
};

/// sup/inf of sum_x f(x) mu(x) over couplings of the grid marginals within the price bands.
/// Throws ErrorKind::Infeasible if no coupling reproduces the prices.
PrimalResult solve_primal(const DiscreteInstance& instance, const PayoffExpr& target,
                          const std::vector<BandedConstraint>& constraints, Optimize direction);

/// Zero-cost static portfolio whose payoff is at least `floor` > 0 at every grid
/// point: the witness of an empty set of consistent couplings.
struct ArbitrageCertificate {
  std::vector<std::vector<double>> marginal_payoffs;  // value per atom of each asset
  std::vector<double> weights;                        // position in each constraint instrument
  double cost = 0.0;
  double floor = 0.0;
};

struct FeasibilityReport {
  bool feasible = false;
  double infeasibility = 0.0;
  std::vector<CouplingAtom> coupling;  // witness when feasible
  ArbitrageCertificate certificate;    // when infeasible
};

FeasibilityReport check_feasibility(const DiscreteInstance& instance, const std::vector<BandedConstraint>& constraints);

}  // namespace mfb
