#include "mfbounds/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfbounds/error.hpp"
#include "mfbounds/normal.hpp"

namespace mfb {

void MarketSpec::validate() const {
  const auto d = s0.size();
  require(d >= 1, "market needs at least one asset");
  require(sigma.size() == d, "sigma length must equal the number of assets");
  require(rho.rows() == static_cast<Eigen::Index>(d) && rho.cols() == static_cast<Eigen::Index>(d),
          "rho must be d x d");
  require(maturity > 0.0, "maturity must be positive");
  require(rate == 0.0, "only the zero-rate convention is supported");
  for (std::size_t j = 0; j < d; ++j) {
    require(s0[j] > 0.0 && std::isfinite(s0[j]), "initial prices must be positive");
    require(sigma[j] >= 0.0 && std::isfinite(sigma[j]), "volatilities must be nonnegative");
    require(std::abs(rho(j, j) - 1.0) < 1e-12, "rho must have a unit diagonal");
    for (std::size_t k = 0; k < j; ++k) {
      require(std::abs(rho(j, k) - rho(k, j)) < 1e-12, "rho must be symmetric");
    }
  }
}

Eigen::MatrixXd MarketSpec::cholesky() const {
  Eigen::LLT<Eigen::MatrixXd> llt(rho);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::Factorization, "correlation matrix is not positive definite");
  }
  return llt.matrixL();
}

MarketSpec MarketSpec::uniform(std::vector<double> sigma, double s0, double rho_offdiag,
                               double maturity) {
  const auto d = static_cast<Eigen::Index>(sigma.size());
  MarketSpec spec;
  spec.s0.assign(sigma.size(), s0);
  spec.sigma = std::move(sigma);
  spec.rho = Eigen::MatrixXd::Constant(d, d, rho_offdiag);
  spec.rho.diagonal().setOnes();
  spec.maturity = maturity;
  return spec;
}

std::string to_string(SampleSource source) {
  switch (source) {
    case SampleSource::Copula:
      return "copula";
    case SampleSource::Reference:
      return "reference";
    case SampleSource::Discrete:
      return "discrete";
  }
  return "unknown";
}

namespace {

double lognormal_price(const MarketSpec& spec, int j, double z) {
  const double s = spec.sigma[j];
  const double t = spec.maturity;
  return spec.s0[j] * std::exp(-0.5 * s * s * t + s * std::sqrt(t) * z);
}

Eigen::MatrixXd standard_normals(std::size_t n, int d, Seed seed) {
  Engine engine = make_engine(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), d);
  // Row-major fill so a prefix of rows is reproducible for any n.
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (int j = 0; j < d; ++j) z(r, j) = normal(engine);
  }
  return z;
}

}  // namespace

SampleBatch sample_copula(const MarketSpec& spec, std::size_t n, Seed seed) {
  require(n >= 1, "sample count must be at least 1");
  spec.validate();
  const Eigen::MatrixXd chol = spec.cholesky();
  const int d = spec.dimension();
  Eigen::MatrixXd z = standard_normals(n, d, seed) * chol.transpose();
  SampleBatch batch{Eigen::MatrixXd(z.rows(), d), seed, SampleSource::Copula};
  for (int j = 0; j < d; ++j) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) batch.values(r, j) = lognormal_price(spec, j, z(r, j));
  }
  return batch;
}

SampleBatch sample_reference(const MarketSpec& spec, std::size_t n, Seed seed) {
  require(n >= 1, "sample count must be at least 1");
  spec.validate();
  const int d = spec.dimension();
  const Eigen::MatrixXd z = standard_normals(n, d, seed);
  SampleBatch batch{Eigen::MatrixXd(z.rows(), d), seed, SampleSource::Reference};
  for (int j = 0; j < d; ++j) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) batch.values(r, j) = lognormal_price(spec, j, z(r, j));
  }
  return batch;
}

double marginal_quantile(const MarketSpec& spec, int j, double u) {
  require(j >= 0 && j < spec.dimension(), "asset index out of range");
  require(u > 0.0 && u < 1.0, "quantile level must lie in (0,1)");
  return lognormal_price(spec, j, norm_quantile(u));
}

double marginal_cdf(const MarketSpec& spec, int j, double x) {
  require(j >= 0 && j < spec.dimension(), "asset index out of range");
  if (x <= 0.0) return 0.0;
  const double s = spec.sigma[j];
  const double t = spec.maturity;
  if (s == 0.0) return x >= spec.s0[j] ? 1.0 : 0.0;
  const double z = (std::log(x / spec.s0[j]) + 0.5 * s * s * t) / (s * std::sqrt(t));
  return norm_cdf(z);
}

std::size_t DiscreteMarginals::grid_size() const {
  std::size_t size = atoms.empty() ? 0 : 1;
  for (const auto& a : atoms) size *= a.size();
  return size;
}

double DiscreteMarginals::mean(int j) const {
  return std::inner_product(atoms[j].begin(), atoms[j].end(), probs[j].begin(), 0.0);
}

void DiscreteMarginals::validate() const {
  require(!atoms.empty() && atoms.size() == probs.size(), "discrete marginals are malformed");
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    require(!atoms[j].empty() && atoms[j].size() == probs[j].size(),
            "atom and probability counts must match");
    require(std::is_sorted(atoms[j].begin(), atoms[j].end()), "atoms must be sorted ascending");
    double total = 0.0;
    for (double p : probs[j]) {
      require(p >= 0.0, "atom probabilities must be nonnegative");
      total += p;
    }
    require(std::abs(total - 1.0) <= 1e-12, "atom probabilities must sum to 1");
  }
}

namespace {

std::vector<double> cumulative(const std::vector<double>& probs) {
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  cdf.back() = 1.0;
  return cdf;
}

int atom_index(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

SampleBatch sample_discrete_product(const DiscreteMarginals& marginals, std::size_t n, Seed seed) {
  require(n >= 1, "sample count must be at least 1");
  const int d = marginals.dimension();
  std::vector<std::vector<double>> cdfs;
  for (const auto& p : marginals.probs) cdfs.push_back(cumulative(p));
  Engine engine = make_engine(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  SampleBatch batch{Eigen::MatrixXd(static_cast<Eigen::Index>(n), d), seed, SampleSource::Discrete};
  for (Eigen::Index r = 0; r < batch.values.rows(); ++r) {
    for (int j = 0; j < d; ++j) batch.values(r, j) = marginals.atoms[j][atom_index(cdfs[j], uniform(engine))];
  }
  return batch;
}

SampleBatch sample_discrete_copula(const MarketSpec& spec, const DiscreteMarginals& marginals,
                                   std::size_t n, Seed seed,
                                   Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>* indices) {
  require(n >= 1, "sample count must be at least 1");
  require(spec.dimension() == marginals.dimension(), "market and grid dimensions differ");
  spec.validate();
  const int d = spec.dimension();
  const Eigen::MatrixXd z = standard_normals(n, d, seed) * spec.cholesky().transpose();
  std::vector<std::vector<double>> cdfs;
  for (const auto& p : marginals.probs) cdfs.push_back(cumulative(p));
  SampleBatch batch{Eigen::MatrixXd(z.rows(), d), seed, SampleSource::Discrete};
  if (indices != nullptr) indices->resize(z.rows(), d);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (int j = 0; j < d; ++j) {
      const int k = atom_index(cdfs[j], norm_cdf(z(r, j)));
      batch.values(r, j) = marginals.atoms[j][k];
      if (indices != nullptr) (*indices)(r, j) = k;
    }
  }
  return batch;
}

std::string to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::Product:
      return "product";
    case ReferenceKind::Copula:
      return "copula";
    case ReferenceKind::Discrete:
      return "discrete";
  }
  return "unknown";
}

ReferenceKind reference_kind_from_string(const std::string& name) {
  if (name == "product") return ReferenceKind::Product;
  if (name == "copula") return ReferenceKind::Copula;
  if (name == "discrete") return ReferenceKind::Discrete;
  fail(ErrorKind::Config, "unknown reference measure '" + name + "'");
}

ReferenceMeasure ReferenceMeasure::product(MarketSpec spec) {
  spec.validate();
  ReferenceMeasure m;
  m.kind_ = ReferenceKind::Product;
  m.spec_ = std::move(spec);
  return m;
}

ReferenceMeasure ReferenceMeasure::copula(MarketSpec spec) {
  spec.validate();
  spec.cholesky();
  ReferenceMeasure m;
  m.kind_ = ReferenceKind::Copula;
  m.spec_ = std::move(spec);
  return m;
}

ReferenceMeasure ReferenceMeasure::discrete(MarketSpec spec, DiscreteMarginals marginals) {
  spec.validate();
  marginals.validate();
  require(spec.dimension() == marginals.dimension(), "market and grid dimensions differ");
  ReferenceMeasure m;
  m.kind_ = ReferenceKind::Discrete;
  m.spec_ = std::move(spec);
  m.marginals_ = std::move(marginals);
  return m;
}

SampleBatch ReferenceMeasure::sample(std::size_t n, Seed seed) const {
  switch (kind_) {
    case ReferenceKind::Product:
      return sample_reference(spec_, n, seed);
    case ReferenceKind::Copula:
      return sample_copula(spec_, n, seed);
    case ReferenceKind::Discrete:
      return sample_discrete_product(marginals_, n, seed);
  }
  return {};
}

SampleBatch ReferenceMeasure::sample_marginals(std::size_t n, Seed seed) const {
  if (kind_ == ReferenceKind::Discrete) return sample_discrete_product(marginals_, n, seed);
  return sample_reference(spec_, n, seed);
}

std::vector<double> ReferenceMeasure::input_scales() const {
  if (kind_ != ReferenceKind::Discrete) return spec_.s0;
  std::vector<double> scales(marginals_.atoms.size());
  for (int j = 0; j < marginals_.dimension(); ++j) scales[j] = marginals_.mean(j);
  return scales;
}

}  // namespace mfb
