#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mfbounds/market.hpp"
#include "mfbounds/payoff.hpp"

namespace mfb {

/// A payoff with its benchmark price. `measure` is "copula" for prices on the
/// continuous marginals and "discrete" for prices exact on a quantile grid.
struct PricedInstrument {
  PayoffExpr payoff;
  double price = 0.0;
  double stderr_ = 0.0;
  std::size_t n_samples = 0;
  Seed seed = 0;
  std::string measure = "copula";
};

PricedInstrument price_mc(const MarketSpec& spec, const PayoffExpr& payoff, std::size_t n, Seed seed);

/// Prices several payoffs on one shared batch (common random numbers).
std::vector<PricedInstrument> price_mc(const MarketSpec& spec, const std::vector<PayoffExpr>& payoffs,
                                       std::size_t n, Seed seed);

/// Zero-rate Black-Scholes call on asset j.
double price_closed_form_call(const MarketSpec& spec, int j, double strike);
double price_closed_form_put(const MarketSpec& spec, int j, double strike);

/// Gaussian-copula coupling restricted to a product grid: the Monte Carlo
/// cell histogram, rescaled by iterative proportional fitting until its
/// marginals match the grid probabilities. Masses are indexed in row-major
/// order over the atoms (asset 1 slowest).
struct GridCoupling {
  std::vector<double> masses;
  std::size_t n_samples = 0;
  Seed seed = 0;
  double marginal_residual = 0.0;
};

GridCoupling benchmark_grid_coupling(const MarketSpec& spec, const DiscreteMarginals& marginals,
                                     std::size_t n, Seed seed, std::size_t max_cells = 1'000'000);

/// Exact expectation of `payoff` under `coupling`; the result is consistent
/// with the grid marginals to round-off.
PricedInstrument price_on_grid(const DiscreteMarginals& marginals, const GridCoupling& coupling,
                               const PayoffExpr& payoff);

/// Evaluates a payoff at every cell of the product grid, in the same order as GridCoupling.
Eigen::VectorXd eval_on_grid(const PayoffExpr& payoff, const DiscreteMarginals& marginals);

}  // namespace mfb
