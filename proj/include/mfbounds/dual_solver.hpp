#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfbounds/adam.hpp"
#include "mfbounds/market.hpp"
#include "mfbounds/mlp.hpp"
#include "mfbounds/payoff.hpp"

namespace mfb {

enum class Direction { Upper, Lower };

std::string to_string(Direction direction);

/// A traded payoff whose price every admissible coupling must reproduce.
struct ConstraintInstrument {
  PayoffExpr payoff;
  double price = 0.0;
};

/// Sup (or inf) of E[target] over couplings of the reference marginals that
/// reproduce every constraint price. An empty constraint list is the
/// marginals-only case.
struct BoundProblem {
  ReferenceMeasure reference;
  PayoffExpr target;
  std::vector<ConstraintInstrument> constraints;
  Direction direction = Direction::Upper;

  int dimension() const { return reference.dimension(); }
  void validate() const;

  /// Drops repeated (canonical payoff text, price) pairs, keeping first occurrences.
  void deduplicate();
};

struct TrainerConfig {
  double gamma = 80.0;
  std::size_t batch_size = 128;
  std::int64_t iterations = 25'000;
  double learning_rate = 1e-3;
  double lr_decay = 0.1;
  /// Fraction of iterations after which the learning rate is multiplied by lr_decay.
  double lr_decay_fraction = 0.8;
  std::size_t eval_samples = std::size_t{1} << 17;
  std::size_t slack_samples = std::size_t{1} << 16;
  double slack_tolerance = 1e-2;
  int hidden_layers = 4;
  int width = 64;
  Seed seed = 20240501;

  void validate() const;
  LearningRateSchedule schedule() const;
};

/// Hedging networks (one per asset), constraint weights, optimizer moments.
///
/// Layout of `params`: the d network parameter blocks back to back, then b.
struct DualState {
  MlpLayout layout;
  std::vector<double> params;
  std::vector<double> input_scales;
  int assets = 0;
  int constraints = 0;
  AdamState adam;

  static DualState initial(const BoundProblem& problem, const TrainerConfig& config);

  std::span<const double> network(int j) const;
  std::span<double> network(int j);
  std::span<const double> weights() const;
  std::span<double> weights();

  /// psi_j evaluated at raw prices.
  Eigen::VectorXd hedge(int j, std::span<const double> prices) const;
};

struct ObjectiveValue {
  double loss = 0.0;
  double cost = 0.0;     // mean sum_j psi_j + sum_i b_i p_i
  double penalty = 0.0;  // mean beta_gamma(f - sum psi - sum b phi)
  std::vector<double> grads;
};

/// mean_rows[sum_j psi_j(x_j)] + sum_i b_i p_i + mean_rows[gamma * max(f - sum_j psi_j - sum_i b_i phi_i, 0)^2].
///
/// `marginal_batch` feeds the cost integral and defaults to `batch`, which is
/// only valid when the reference measure is the product of the marginals.
ObjectiveValue objective_batch(const DualState& state, const SampleBatch& batch, const BoundProblem& problem,
                               double gamma, bool with_gradient = true,
                               const SampleBatch* marginal_batch = nullptr);

struct SlackStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double q01 = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double q99 = 0.0;
  double tolerance = 0.0;
  double violation_fraction = 0.0;
};

/// Residual sum_j psi_j + sum_i b_i phi_i - f on benchmark-coupling samples.
SlackStats slack_diagnostic(const DualState& state, const BoundProblem& problem, std::size_t n, Seed seed,
                            double tolerance = 1e-2);

struct BoundResult {
  Direction direction = Direction::Upper;
  double bound = 0.0;
  std::vector<double> trace;
  double fresh_eval = 0.0;
  double fresh_cost = 0.0;
  double fresh_penalty = 0.0;
  SlackStats slack;
  std::vector<double> b_values;
  double seconds = 0.0;
  TrainerConfig config;
  DualState state;
};

using ProgressCallback = std::function<void(std::int64_t iteration, double loss)>;

/// Adam on fresh reference batches, then the objective on `eval_samples`
/// fresh draws as the reported bound. LOWER problems are delegated to lower_bound.
BoundResult train(const BoundProblem& problem, const TrainerConfig& config, const ProgressCallback& progress = {});

/// Continues from `state` (its Adam step counter is the next iteration index).
BoundResult resume(const BoundProblem& problem, const TrainerConfig& config, DualState state,
                   const ProgressCallback& progress = {});

/// inf E[f] = -sup E[-f]: trains the negated target and flips the sign back.
BoundResult lower_bound(const BoundProblem& problem, const TrainerConfig& config,
                        const ProgressCallback& progress = {});

/// Objective over `n` fresh reference samples, evaluated in chunks.
ObjectiveValue evaluate_objective(const DualState& state, const BoundProblem& problem, double gamma, std::size_t n,
                                  Seed seed);

/// Standard deviation over mean of the trailing moving average of `trace`
/// on iterations [begin, end) (0-based).
double moving_average_stability(std::span<const double> trace, std::size_t begin, std::size_t end,
                                std::size_t window);

}  // namespace mfb
