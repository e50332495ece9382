#include "mfbounds/dual_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "mfbounds/error.hpp"

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace mfb {

namespace {

// Adam moments of inactive ReLU units decay geometrically into subnormal
// range, where arithmetic is orders of magnitude slower.
class FlushDenormals {
 public:
#if defined(__SSE__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

}  // namespace

std::string to_string(Direction direction) { return direction == Direction::Upper ? "upper" : "lower"; }

void BoundProblem::validate() const {
  const int d = dimension();
  if (target.dimension() != d) fail(ErrorKind::Argument, "target payoff does not bind the market dimension");
  for (const auto& c : constraints) {
    if (c.payoff.dimension() != d) fail(ErrorKind::Argument, "constraint payoff does not bind the market dimension");
    require(std::isfinite(c.price), "constraint prices must be finite");
  }
}

void BoundProblem::deduplicate() {
  std::set<std::pair<std::string, double>> seen;
  std::vector<ConstraintInstrument> unique;
  for (auto& c : constraints) {
    if (seen.emplace(c.payoff.to_string(), c.price).second) unique.push_back(std::move(c));
  }
  constraints = std::move(unique);
}

void TrainerConfig::validate() const {
  require(gamma > 0.0, "gamma must be positive");
  require(batch_size >= 2, "batch size must be at least 2");
  require(iterations >= 1, "iterations must be at least 1");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(lr_decay > 0.0, "learning-rate decay must be positive");
  require(lr_decay_fraction >= 0.0 && lr_decay_fraction <= 1.0, "lr_decay_fraction must lie in [0,1]");
  require(eval_samples >= 1, "eval_samples must be positive");
  require(hidden_layers >= 0 && width >= 1, "network shape is invalid");
}

LearningRateSchedule TrainerConfig::schedule() const {
  return LearningRateSchedule{learning_rate, lr_decay,
                              static_cast<std::int64_t>(std::llround(lr_decay_fraction * static_cast<double>(iterations)))};
}

// ---------------------------------------------------------------------------

DualState DualState::initial(const BoundProblem& problem, const TrainerConfig& config) {
  DualState s;
  s.layout = MlpLayout::scalar(config.hidden_layers, config.width);
  s.assets = problem.dimension();
  s.constraints = static_cast<int>(problem.constraints.size());
  s.input_scales = problem.reference.input_scales();
  const std::size_t block = s.layout.parameter_count();
  s.params.assign(block * static_cast<std::size_t>(s.assets) + static_cast<std::size_t>(s.constraints), 0.0);
  for (int j = 0; j < s.assets; ++j) {
    const auto init = init_xavier(s.layout, derive_seed(config.seed, "init", static_cast<std::uint64_t>(j)));
    std::copy(init.begin(), init.end(), s.params.begin() + static_cast<std::ptrdiff_t>(block * j));
  }
  s.adam = AdamState(s.params.size());
  return s;
}

std::span<const double> DualState::network(int j) const {
  const std::size_t block = layout.parameter_count();
  return std::span<const double>(params).subspan(block * static_cast<std::size_t>(j), block);
}

std::span<double> DualState::network(int j) {
  const std::size_t block = layout.parameter_count();
  return std::span<double>(params).subspan(block * static_cast<std::size_t>(j), block);
}

std::span<const double> DualState::weights() const {
  return std::span<const double>(params).subspan(layout.parameter_count() * static_cast<std::size_t>(assets));
}

std::span<double> DualState::weights() {
  return std::span<double>(params).subspan(layout.parameter_count() * static_cast<std::size_t>(assets));
}

Eigen::VectorXd DualState::hedge(int j, std::span<const double> prices) const {
  std::vector<double> inputs(prices.size());
  for (std::size_t r = 0; r < prices.size(); ++r) inputs[r] = prices[r] / input_scales[j];
  return forward(layout, network(j), inputs);
}

// ---------------------------------------------------------------------------

namespace {

/// Sum over assets of psi_j(x_j), optionally keeping tapes for backward.
Eigen::VectorXd hedge_sum(const DualState& state, const Eigen::MatrixXd& x, std::vector<MlpTape>* tapes) {
  const Eigen::Index n = x.rows();
  Eigen::VectorXd total = Eigen::VectorXd::Zero(n);
  std::vector<double> inputs(static_cast<std::size_t>(n));
  if (tapes != nullptr) tapes->resize(static_cast<std::size_t>(state.assets));
  for (int j = 0; j < state.assets; ++j) {
    for (Eigen::Index r = 0; r < n; ++r) inputs[static_cast<std::size_t>(r)] = x(r, j) / state.input_scales[j];
    if (tapes != nullptr) {
      total += forward(state.layout, state.network(j), inputs, (*tapes)[static_cast<std::size_t>(j)]);
    } else {
      total += forward(state.layout, state.network(j), inputs);
    }
  }
  return total;
}

void check_state(const DualState& state, const BoundProblem& problem) {
  require(state.assets == problem.dimension(), "state and problem dimensions differ");
  require(state.constraints == static_cast<int>(problem.constraints.size()),
          "state and problem constraint counts differ");
}

}  // namespace

ObjectiveValue objective_batch(const DualState& state, const SampleBatch& batch, const BoundProblem& problem,
                               double gamma, bool with_gradient, const SampleBatch* marginal_batch) {
  check_state(state, problem);
  if (batch.cols() != problem.dimension()) fail(ErrorKind::Argument, "batch dimension does not match the problem");
  if (marginal_batch != nullptr && marginal_batch->cols() != problem.dimension()) {
    fail(ErrorKind::Argument, "marginal batch dimension does not match the problem");
  }
  const bool shared = marginal_batch == nullptr;
  const Eigen::Index n = batch.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto b = state.weights();

  std::vector<MlpTape> tapes;
  const Eigen::VectorXd psi = hedge_sum(state, batch.values, with_gradient ? &tapes : nullptr);

  Eigen::VectorXd residual = eval_payoff(problem.target, batch) - psi;  // f - sum psi - sum b phi
  std::vector<Eigen::VectorXd> phi;
  phi.reserve(problem.constraints.size());
  double priced = 0.0;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    phi.push_back(eval_payoff(problem.constraints[i].payoff, batch));
    residual -= b[i] * phi.back();
    priced += b[i] * problem.constraints[i].price;
  }
  const Eigen::ArrayXd excess = residual.array().max(0.0);

  ObjectiveValue out;
  std::vector<MlpTape> marginal_tapes;
  const double psi_mean =
      shared ? psi.mean() : hedge_sum(state, marginal_batch->values, with_gradient ? &marginal_tapes : nullptr).mean();
  out.cost = psi_mean + priced;
  out.penalty = gamma * excess.square().sum() * inv_n;
  out.loss = out.cost + out.penalty;
  if (!with_gradient) return out;

  out.grads.assign(state.params.size(), 0.0);
  const std::size_t block = state.layout.parameter_count();
  // d penalty / d psi_j(x_rj) = -2 gamma excess_r / n ; d cost / d psi_j = 1/n (per marginal row).
  const Eigen::VectorXd dpenalty = (-2.0 * gamma * inv_n) * excess.matrix();
  std::vector<double> grad_out(static_cast<std::size_t>(n));
  for (int j = 0; j < state.assets; ++j) {
    std::span<double> g(out.grads.data() + block * static_cast<std::size_t>(j), block);
    for (Eigen::Index r = 0; r < n; ++r) grad_out[static_cast<std::size_t>(r)] = dpenalty[r] + (shared ? inv_n : 0.0);
    backward(state.layout, state.network(j), tapes[static_cast<std::size_t>(j)], grad_out, g);
    if (!shared) {
      const Eigen::Index m = marginal_batch->rows();
      std::vector<double> unit(static_cast<std::size_t>(m), 1.0 / static_cast<double>(m));
      backward(state.layout, state.network(j), marginal_tapes[static_cast<std::size_t>(j)], unit, g);
    }
  }
  const std::size_t b_offset = block * static_cast<std::size_t>(state.assets);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    out.grads[b_offset + i] = problem.constraints[i].price + dpenalty.dot(phi[i]);
  }
  return out;
}

ObjectiveValue evaluate_objective(const DualState& state, const BoundProblem& problem, double gamma, std::size_t n,
                                  Seed seed) {
  constexpr std::size_t kChunk = 8192;
  ObjectiveValue total;
  for (std::size_t begin = 0, chunk = 0; begin < n; begin += kChunk, ++chunk) {
    const std::size_t len = std::min(kChunk, n - begin);
    const SampleBatch batch = problem.reference.sample(len, derive_seed(seed, "eval", chunk));
    ObjectiveValue part;
    if (problem.reference.is_product()) {
      part = objective_batch(state, batch, problem, gamma, false);
    } else {
      const SampleBatch marg = problem.reference.sample_marginals(len, derive_seed(seed, "eval-marginals", chunk));
      part = objective_batch(state, batch, problem, gamma, false, &marg);
    }
    const double w = static_cast<double>(len) / static_cast<double>(n);
    total.cost += w * part.cost;
    total.penalty += w * part.penalty;
  }
  total.loss = total.cost + total.penalty;
  return total;
}

// ---------------------------------------------------------------------------

SlackStats slack_diagnostic(const DualState& state, const BoundProblem& problem, std::size_t n, Seed seed,
                            double tolerance) {
  check_state(state, problem);
  require(n >= 1, "slack diagnostic needs at least one sample");
  const auto& ref = problem.reference;
  const SampleBatch batch = ref.kind() == ReferenceKind::Discrete
                                ? sample_discrete_copula(ref.market(), ref.marginals(), n, seed)
                                : sample_copula(ref.market(), n, seed);
  Eigen::VectorXd r = hedge_sum(state, batch.values, nullptr) - eval_payoff(problem.target, batch);
  const auto b = state.weights();
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    r += b[i] * eval_payoff(problem.constraints[i].payoff, batch);
  }

  SlackStats s;
  s.n = n;
  s.tolerance = tolerance;
  s.mean = r.mean();
  s.stddev = n > 1 ? std::sqrt((r.array() - s.mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
  s.violation_fraction = static_cast<double>((r.array() < -tolerance).count()) / static_cast<double>(n);
  std::vector<double> sorted(r.data(), r.data() + r.size());
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double p) { return sorted[static_cast<std::size_t>(p * static_cast<double>(n - 1))]; };
  s.q01 = q(0.01);
  s.q05 = q(0.05);
  s.q50 = q(0.50);
  s.q95 = q(0.95);
  s.q99 = q(0.99);
  return s;
}

// ---------------------------------------------------------------------------

BoundResult resume(const BoundProblem& problem, const TrainerConfig& config, DualState state,
                   const ProgressCallback& progress) {
  problem.validate();
  config.validate();
  check_state(state, problem);
  require(problem.direction == Direction::Upper, "resume expects an upper-bound problem");
  const FlushDenormals ftz;
  const auto start = std::chrono::steady_clock::now();
  const LearningRateSchedule lr = config.schedule();

  BoundResult result;
  result.direction = Direction::Upper;
  result.config = config;
  result.trace.reserve(static_cast<std::size_t>(config.iterations));

  for (std::int64_t it = state.adam.step; it < config.iterations; ++it) {
    const auto iter = static_cast<std::uint64_t>(it);
    const SampleBatch batch = problem.reference.sample(config.batch_size, derive_seed(config.seed, "train", iter));
    ObjectiveValue obj;
    if (problem.reference.is_product()) {
      obj = objective_batch(state, batch, problem, config.gamma);
    } else {
      const SampleBatch marg =
          problem.reference.sample_marginals(config.batch_size, derive_seed(config.seed, "train-marginals", iter));
      obj = objective_batch(state, batch, problem, config.gamma, true, &marg);
    }
    if (!std::isfinite(obj.loss)) throw TrainingAbort("non-finite training loss", it);
    adam_step(state.params, obj.grads, state.adam, lr.at(it));
    result.trace.push_back(obj.loss);
    if (progress) progress(it, obj.loss);
  }

  const ObjectiveValue fresh =
      evaluate_objective(state, problem, config.gamma, config.eval_samples, derive_seed(config.seed, "fresh"));
  if (!std::isfinite(fresh.loss)) throw TrainingAbort("non-finite final objective", config.iterations);
  result.fresh_eval = fresh.loss;
  result.fresh_cost = fresh.cost;
  result.fresh_penalty = fresh.penalty;
  result.bound = fresh.loss;
  result.slack = slack_diagnostic(state, problem, config.slack_samples, derive_seed(config.seed, "slack"),
                                  config.slack_tolerance);
  const auto b = state.weights();
  result.b_values.assign(b.begin(), b.end());
  result.state = std::move(state);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

BoundResult train(const BoundProblem& problem, const TrainerConfig& config, const ProgressCallback& progress) {
  if (problem.direction == Direction::Lower) return lower_bound(problem, config, progress);
  problem.validate();
  config.validate();
  return resume(problem, config, DualState::initial(problem, config), progress);
}

BoundResult lower_bound(const BoundProblem& problem, const TrainerConfig& config, const ProgressCallback& progress) {
  BoundProblem negated = problem;
  negated.target = negate(problem.target);
  negated.direction = Direction::Upper;
  BoundResult r = train(negated, config, progress);
  r.direction = Direction::Lower;
  r.bound = -r.bound;
  r.fresh_eval = -r.fresh_eval;
  r.fresh_cost = -r.fresh_cost;
  r.fresh_penalty = -r.fresh_penalty;
  for (double& v : r.trace) v = -v;
  // Subhedge weights: the negated superhedge.
  for (double& v : r.b_values) v = -v;
  return r;
}

double moving_average_stability(std::span<const double> trace, std::size_t begin, std::size_t end,
                                 std::size_t window) {
  require(window >= 1, "window must be positive");
  require(begin + 1 >= window && end <= trace.size() && begin < end, "moving-average range out of bounds");
  std::vector<double> avg;
  avg.reserve(end - begin);
  double running = std::accumulate(trace.begin() + static_cast<std::ptrdiff_t>(begin + 1 - window),
                                   trace.begin() + static_cast<std::ptrdiff_t>(begin + 1), 0.0);
  avg.push_back(running / static_cast<double>(window));
  for (std::size_t t = begin + 1; t < end; ++t) {
    running += trace[t] - trace[t - window];
    avg.push_back(running / static_cast<double>(window));
  }
  const double mean = std::accumulate(avg.begin(), avg.end(), 0.0) / static_cast<double>(avg.size());
  double var = 0.0;
  for (double v : avg) var += (v - mean) * (v - mean);
  var /= static_cast<double>(avg.size());
  return std::sqrt(var) / std::abs(mean);
}

}  // namespace mfb
