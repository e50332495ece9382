#include "mfbounds/pricer.hpp"

#include <cmath>

#include "mfbounds/error.hpp"
#include "mfbounds/normal.hpp"

namespace mfb {

namespace {

PricedInstrument summarize(const PayoffExpr& payoff, const Eigen::VectorXd& values, std::size_t n, Seed seed) {
  const double mean = values.mean();
  const double var = (values.array() - mean).square().sum() / static_cast<double>(values.size() - 1);
  return PricedInstrument{payoff, mean, std::sqrt(var / static_cast<double>(values.size())), n, seed, "copula"};
}

}  // namespace

PricedInstrument price_mc(const MarketSpec& spec, const PayoffExpr& payoff, std::size_t n, Seed seed) {
  return price_mc(spec, std::vector<PayoffExpr>{payoff}, n, seed).front();
}

std::vector<PricedInstrument> price_mc(const MarketSpec& spec, const std::vector<PayoffExpr>& payoffs,
                                       std::size_t n, Seed seed) {
  require(n >= 1000, "Monte Carlo pricing needs at least 1000 samples");
  for (const auto& p : payoffs) {
    if (p.dimension() != spec.dimension()) fail(ErrorKind::Argument, "payoff dimension does not match the market");
  }
  const SampleBatch batch = sample_copula(spec, n, seed);
  std::vector<PricedInstrument> out;
  out.reserve(payoffs.size());
  for (const auto& p : payoffs) out.push_back(summarize(p, eval_payoff(p, batch), n, seed));
  return out;
}

double price_closed_form_call(const MarketSpec& spec, int j, double strike) {
  require(j >= 0 && j < spec.dimension(), "asset index out of range");
  require(strike >= 0.0, "strike must be nonnegative");
  const double s = spec.s0[j];
  const double vol = spec.sigma[j] * std::sqrt(spec.maturity);
  if (strike == 0.0) return s;
  if (vol == 0.0) return std::max(s - strike, 0.0);
  const double d1 = (std::log(s / strike) + 0.5 * vol * vol) / vol;
  const double d2 = d1 - vol;
  return s * norm_cdf(d1) - strike * norm_cdf(d2);
}

double price_closed_form_put(const MarketSpec& spec, int j, double strike) {
  return price_closed_form_call(spec, j, strike) - spec.s0[j] + strike;
}

GridCoupling benchmark_grid_coupling(const MarketSpec& spec, const DiscreteMarginals& marginals,
                                     std::size_t n, Seed seed, std::size_t max_cells) {
  marginals.validate();
  const int d = marginals.dimension();
  const std::size_t cells = marginals.grid_size();
  if (cells > max_cells) {
    fail(ErrorKind::SizeCap, "product grid has " + std::to_string(cells) + " cells, cap is " + std::to_string(max_cells));
  }
  std::vector<std::size_t> stride(d, 1);
  for (int j = d - 2; j >= 0; --j) stride[j] = stride[j + 1] * marginals.atoms[j + 1].size();

  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> idx;
  sample_discrete_copula(spec, marginals, n, seed, &idx);

  // A tiny floor keeps every cell reachable by the fitting iterations.
  std::vector<double> mass(cells, 1e-12);
  for (Eigen::Index r = 0; r < idx.rows(); ++r) {
    std::size_t cell = 0;
    for (int j = 0; j < d; ++j) cell += stride[j] * static_cast<std::size_t>(idx(r, j));
    mass[cell] += 1.0;
  }

  auto atom_of = [&](std::size_t cell, int j) { return (cell / stride[j]) % marginals.atoms[j].size(); };

  double residual = 0.0;
  for (int sweep = 0; sweep < 2000; ++sweep) {
    residual = 0.0;
    for (int j = 0; j < d; ++j) {
      std::vector<double> sums(marginals.atoms[j].size(), 0.0);
      for (std::size_t c = 0; c < cells; ++c) sums[atom_of(c, j)] += mass[c];
      double total = 0.0;
      for (double s : sums) total += s;
      for (std::size_t k = 0; k < sums.size(); ++k) {
        residual = std::max(residual, std::abs(sums[k] / total - marginals.probs[j][k]));
      }
      for (std::size_t c = 0; c < cells; ++c) {
        const auto k = atom_of(c, j);
        mass[c] *= (sums[k] > 0.0) ? marginals.probs[j][k] / sums[k] : 0.0;
      }
    }
    if (residual < 1e-14) break;
  }
  return GridCoupling{std::move(mass), n, seed, residual};
}

Eigen::VectorXd eval_on_grid(const PayoffExpr& payoff, const DiscreteMarginals& marginals) {
  const int d = marginals.dimension();
  require(payoff.dimension() == d, "payoff dimension does not match the grid");
  const std::size_t cells = marginals.grid_size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(cells));
  constexpr std::size_t kChunk = 1 << 15;
  Eigen::MatrixXd points;
  for (std::size_t begin = 0; begin < cells; begin += kChunk) {
    const std::size_t len = std::min(kChunk, cells - begin);
    points.resize(static_cast<Eigen::Index>(len), d);
    for (std::size_t r = 0; r < len; ++r) {
      std::size_t cell = begin + r;
      for (int j = d - 1; j >= 0; --j) {
        const std::size_t nj = marginals.atoms[j].size();
        points(static_cast<Eigen::Index>(r), j) = marginals.atoms[j][cell % nj];
        cell /= nj;
      }
    }
    out.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(len)) = eval_payoff(payoff, points);
  }
  return out;
}

PricedInstrument price_on_grid(const DiscreteMarginals& marginals, const GridCoupling& coupling,
                               const PayoffExpr& payoff) {
  const Eigen::VectorXd values = eval_on_grid(payoff, marginals);
  require(static_cast<std::size_t>(values.size()) == coupling.masses.size(), "coupling does not match the grid");
  const Eigen::Map<const Eigen::VectorXd> mass(coupling.masses.data(), values.size());
  const double mean = values.dot(mass);
  return PricedInstrument{payoff, mean, 0.0, coupling.n_samples, coupling.seed, "discrete"};
}

}  // namespace mfb
