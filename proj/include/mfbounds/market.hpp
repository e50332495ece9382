#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "mfbounds/rng.hpp"

namespace mfb {

/// Lognormal marginals coupled by a Gaussian copula, zero interest rate.
///
/// Asset j terminates at s0[j] * exp(-sigma_j^2 T / 2 + sigma_j sqrt(T) Z_j), so the
/// marginal mean equals s0[j]. Zero volatilities are allowed and collapse the asset
/// onto its forward.
struct MarketSpec {
  std::vector<double> s0;
  std::vector<double> sigma;
  Eigen::MatrixXd rho;
  double maturity = 1.0;
  double rate = 0.0;

  int dimension() const { return static_cast<int>(s0.size()); }

  /// Throws ErrorKind::Argument on shape or range violations.
  void validate() const;

  /// Lower Cholesky factor of rho; throws ErrorKind::Factorization when rho is not PD.
  Eigen::MatrixXd cholesky() const;

  /// Equicorrelated market with identical spots.
  static MarketSpec uniform(std::vector<double> sigma, double s0, double rho_offdiag, double maturity);
};

enum class SampleSource { Copula, Reference, Discrete };

std::string to_string(SampleSource source);

/// n x d terminal prices, one column per asset.
struct SampleBatch {
  Eigen::MatrixXd values;
  Seed seed = 0;
  SampleSource source = SampleSource::Copula;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

SampleBatch sample_copula(const MarketSpec& spec, std::size_t n, Seed seed);

/// Product of the marginals: independent columns, column j distributed as asset j.
SampleBatch sample_reference(const MarketSpec& spec, std::size_t n, Seed seed);

double marginal_quantile(const MarketSpec& spec, int j, double u);
double marginal_cdf(const MarketSpec& spec, int j, double x);

/// Finite-support marginals (atoms sorted ascending, probabilities summing to 1).
struct DiscreteMarginals {
  std::vector<std::vector<double>> atoms;
  std::vector<std::vector<double>> probs;

  int dimension() const { return static_cast<int>(atoms.size()); }
  std::size_t grid_size() const;
  double mean(int j) const;
  void validate() const;
};

/// Independent draws from each discrete marginal.
SampleBatch sample_discrete_product(const DiscreteMarginals& marginals, std::size_t n, Seed seed);

/// Gaussian-copula draws mapped onto the atoms through the cumulative
/// probabilities; returns atom indices per row (n x d) in `indices` when non-null.
SampleBatch sample_discrete_copula(const MarketSpec& spec, const DiscreteMarginals& marginals,
                                   std::size_t n, Seed seed,
                                   Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>* indices = nullptr);

enum class ReferenceKind { Product, Copula, Discrete };

std::string to_string(ReferenceKind kind);
ReferenceKind reference_kind_from_string(const std::string& name);

/// The sampling measure for the penalty integral, together with the marginal
/// sample stream used for the cost term.
class ReferenceMeasure {
 public:
  static ReferenceMeasure product(MarketSpec spec);
  static ReferenceMeasure copula(MarketSpec spec);
  static ReferenceMeasure discrete(MarketSpec spec, DiscreteMarginals marginals);

  ReferenceKind kind() const { return kind_; }
  int dimension() const { return spec_.dimension(); }
  const MarketSpec& market() const { return spec_; }
  const DiscreteMarginals& marginals() const { return marginals_; }

  /// True when one draw serves both the penalty and the marginal cost integrals.
  bool is_product() const { return kind_ != ReferenceKind::Copula; }

  SampleBatch sample(std::size_t n, Seed seed) const;

  /// Draws from the product of the marginals.
  SampleBatch sample_marginals(std::size_t n, Seed seed) const;

  /// Per-asset input scale for the hedging networks (marginal means).
  std::vector<double> input_scales() const;

 private:
  ReferenceKind kind_ = ReferenceKind::Product;
  MarketSpec spec_;
  DiscreteMarginals marginals_;
};

}  // namespace mfb
