#include "mfbounds/lp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfbounds/error.hpp"

namespace mfb {

std::vector<int> DiscreteInstance::cell_atoms(std::size_t cell) const {
  const int d = dimension();
  std::vector<int> atoms(static_cast<std::size_t>(d));
  for (int j = d - 1; j >= 0; --j) {
    const std::size_t nj = marginals.atoms[j].size();
    atoms[j] = static_cast<int>(cell % nj);
    cell /= nj;
  }
  return atoms;
}

DiscreteInstance discretize(const MarketSpec& spec, const std::vector<int>& grid_sizes, std::size_t max_variables) {
  spec.validate();
  require(static_cast<int>(grid_sizes.size()) == spec.dimension(), "one grid size per asset is required");
  double cells = 1.0;
  for (int n : grid_sizes) {
    require(n >= 2, "each grid needs at least 2 atoms");
    cells *= n;
  }
  if (cells > static_cast<double>(max_variables)) {
    fail(ErrorKind::SizeCap, "product grid of " + std::to_string(static_cast<long long>(cells)) +
                                 " cells exceeds the cap of " + std::to_string(max_variables));
  }
  DiscreteInstance inst;
  inst.max_variables = max_variables;
  for (int j = 0; j < spec.dimension(); ++j) {
    const int n = grid_sizes[j];
    std::vector<double> atoms(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) atoms[k] = marginal_quantile(spec, j, (k + 0.5) / n);
    inst.marginals.atoms.push_back(std::move(atoms));
    inst.marginals.probs.emplace_back(static_cast<std::size_t>(n), 1.0 / n);
  }
  return inst;
}

double default_tolerance(const PricedInstrument& instrument) {
  if (instrument.measure == "discrete") return 1e-9;
  return std::max(3.0 * instrument.stderr_, 1e-4);
}

std::vector<BandedConstraint> banded(const std::vector<PricedInstrument>& instruments) {
  std::vector<BandedConstraint> out;
  out.reserve(instruments.size());
  for (const auto& p : instruments) out.push_back({p.payoff, p.price, default_tolerance(p)});
  return out;
}

namespace {

struct Assembly {
  lp::LinearProgram program{{}};
  // Row of (asset j, atom k), or -1 for the dropped redundant row.
  std::vector<std::vector<int>> marginal_row;
  // Rows for each price band: {upper, lower}; lower == -1 for equality rows.
  std::vector<std::pair<int, int>> price_rows;
  // Slack column per price band row pair: {upper slack, lower slack}.
  std::vector<std::pair<long, long>> slack_columns;
};

Assembly assemble(const DiscreteInstance& instance, const Eigen::VectorXd* objective,
                  const std::vector<BandedConstraint>& constraints) {
  instance.marginals.validate();
  const int d = instance.dimension();
  const std::size_t cells = instance.cells();
  if (cells > instance.max_variables) {
    fail(ErrorKind::SizeCap, "product grid of " + std::to_string(cells) + " cells exceeds the cap of " +
                                 std::to_string(instance.max_variables));
  }

  Assembly a;
  std::vector<double> rhs;
  a.marginal_row.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto& probs = instance.marginals.probs[j];
    for (std::size_t k = 0; k < probs.size(); ++k) {
      // Marginal rows of assets 2..d each repeat the total mass once; drop their last atom.
      if (j > 0 && k + 1 == probs.size()) {
        a.marginal_row[j].push_back(-1);
      } else {
        a.marginal_row[j].push_back(static_cast<int>(rhs.size()));
        rhs.push_back(probs[k]);
      }
    }
  }
  for (const auto& c : constraints) {
    require(c.tolerance >= 0.0, "constraint tolerance must be nonnegative");
    if (c.payoff.dimension() != d) fail(ErrorKind::Argument, "constraint payoff does not bind the grid dimension");
    if (c.tolerance == 0.0) {
      a.price_rows.emplace_back(static_cast<int>(rhs.size()), -1);
      rhs.push_back(c.price);
    } else {
      a.price_rows.emplace_back(static_cast<int>(rhs.size()), static_cast<int>(rhs.size() + 1));
      rhs.push_back(c.price + c.tolerance);
      rhs.push_back(c.price - c.tolerance);
    }
  }
  a.program = lp::LinearProgram(std::move(rhs));

  std::vector<Eigen::VectorXd> phi;
  for (const auto& c : constraints) phi.push_back(eval_on_grid(c.payoff, instance.marginals));

  std::vector<int> rows;
  std::vector<double> values;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    rows.clear();
    values.clear();
    const auto atoms = instance.cell_atoms(cell);
    for (int j = 0; j < d; ++j) {
      const int r = a.marginal_row[j][static_cast<std::size_t>(atoms[j])];
      if (r >= 0) {
        rows.push_back(r);
        values.push_back(1.0);
      }
    }
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      const double v = phi[i][static_cast<Eigen::Index>(cell)];
      rows.push_back(a.price_rows[i].first);
      values.push_back(v);
      if (a.price_rows[i].second >= 0) {
        rows.push_back(a.price_rows[i].second);
        values.push_back(v);
      }
    }
    const double c = objective != nullptr ? (*objective)[static_cast<Eigen::Index>(cell)] : 0.0;
    a.program.add_column(c, rows, values);
  }
  for (const auto& [upper, lower] : a.price_rows) {
    if (lower < 0) {
      a.slack_columns.emplace_back(-1, -1);
      continue;
    }
    const long su = static_cast<long>(a.program.add_column(0.0, {upper}, {1.0}));
    const long sl = static_cast<long>(a.program.add_column(0.0, {lower}, {-1.0}));
    a.slack_columns.emplace_back(su, sl);
  }
  return a;
}

std::vector<CouplingAtom> extract_coupling(const DiscreteInstance& instance, const std::vector<double>& x) {
  std::vector<CouplingAtom> out;
  for (std::size_t cell = 0; cell < instance.cells(); ++cell) {
    if (x[cell] > 1e-15) out.push_back({instance.cell_atoms(cell), x[cell]});
  }
  return out;
}

double coupling_marginal_residual(const DiscreteInstance& instance, const std::vector<CouplingAtom>& coupling) {
  double worst = 0.0;
  for (int j = 0; j < instance.dimension(); ++j) {
    std::vector<double> sums(instance.marginals.probs[j].size(), 0.0);
    for (const auto& c : coupling) sums[static_cast<std::size_t>(c.atoms[j])] += c.mass;
    for (std::size_t k = 0; k < sums.size(); ++k) {
      worst = std::max(worst, std::abs(sums[k] - instance.marginals.probs[j][k]));
    }
  }
  return worst;
}

ArbitrageCertificate certificate_from(const DiscreteInstance& instance, const std::vector<BandedConstraint>& constraints,
                                      const Assembly& a, const std::vector<double>& farkas) {
  // Farkas: y^T A <= 0 on every column and y^T b > 0. The portfolio -y pays
  // -y^T A(x) >= 0 at every cell and costs -y^T b < 0 (band-adjusted).
  ArbitrageCertificate cert;
  const int d = instance.dimension();
  double yb = 0.0;
  for (std::size_t r = 0; r < farkas.size(); ++r) yb += farkas[r] * a.program.rhs()[r];
  cert.marginal_payoffs.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    for (int row : a.marginal_row[j]) cert.marginal_payoffs[j].push_back(row >= 0 ? -farkas[row] : 0.0);
  }
  for (const auto& [upper, lower] : a.price_rows) {
    double w = -farkas[upper];
    if (lower >= 0) w -= farkas[lower];
    cert.weights.push_back(w);
  }
  // Spend the negative cost on a constant: shifts the payoff floor to y^T b at zero net cost.
  for (double& v : cert.marginal_payoffs[0]) v += yb;
  double cost = 0.0;
  for (int j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < cert.marginal_payoffs[j].size(); ++k) {
      cost += cert.marginal_payoffs[j][k] * instance.marginals.probs[j][k];
    }
  }
  std::vector<Eigen::VectorXd> phi;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const double w = cert.weights[i];
    cost += w * constraints[i].price + std::abs(w) * constraints[i].tolerance;
    phi.push_back(eval_on_grid(constraints[i].payoff, instance.marginals));
  }
  double floor = std::numeric_limits<double>::infinity();
  for (std::size_t cell = 0; cell < instance.cells(); ++cell) {
    const auto atoms = instance.cell_atoms(cell);
    double payoff = 0.0;
    for (int j = 0; j < d; ++j) payoff += cert.marginal_payoffs[j][static_cast<std::size_t>(atoms[j])];
    for (std::size_t i = 0; i < constraints.size(); ++i) payoff += cert.weights[i] * phi[i][static_cast<Eigen::Index>(cell)];
    floor = std::min(floor, payoff);
  }
  cert.cost = cost;
  cert.floor = floor;
  return cert;
}

}  // namespace

PrimalResult solve_primal(const DiscreteInstance& instance, const PayoffExpr& target,
                          const std::vector<BandedConstraint>& constraints, Optimize direction) {
  if (target.dimension() != instance.dimension()) fail(ErrorKind::Argument, "target payoff does not bind the grid dimension");
  Eigen::VectorXd objective = eval_on_grid(target, instance.marginals);
  if (direction == Optimize::Max) objective = -objective;
  const Assembly a = assemble(instance, &objective, constraints);
  const lp::Solution sol = lp::solve(a.program);
  if (sol.status == lp::Status::Infeasible) {
    fail(ErrorKind::Infeasible, "no coupling of the grid marginals reproduces the constraint prices "
                                "(phase-one residual " + std::to_string(sol.infeasibility) + ")");
  }
  if (sol.status != lp::Status::Optimal) fail(ErrorKind::Argument, "simplex did not converge");

  PrimalResult out;
  out.status = sol.status;
  out.optimum = direction == Optimize::Max ? -sol.objective : sol.objective;
  out.coupling = extract_coupling(instance, sol.x);
  out.marginal_residual = coupling_marginal_residual(instance, out.coupling);
  out.iterations = sol.iterations;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const auto [su, sl] = a.slack_columns[i];
    if (su < 0) {
      out.active.push_back({i, "equality"});
    } else if (sol.x[static_cast<std::size_t>(su)] <= 1e-12) {
      out.active.push_back({i, "upper"});
    } else if (sol.x[static_cast<std::size_t>(sl)] <= 1e-12) {
      out.active.push_back({i, "lower"});
    }
  }
  return out;
}

FeasibilityReport check_feasibility(const DiscreteInstance& instance, const std::vector<BandedConstraint>& constraints) {
  const Assembly a = assemble(instance, nullptr, constraints);
  const lp::Solution sol = lp::solve(a.program);
  FeasibilityReport report;
  report.feasible = sol.status == lp::Status::Optimal;
  report.infeasibility = sol.infeasibility;
  if (report.feasible) {
    report.coupling = extract_coupling(instance, sol.x);
  } else if (sol.status == lp::Status::Infeasible) {
    report.certificate = certificate_from(instance, constraints, a, sol.duals);
  } else {
    fail(ErrorKind::Argument, "simplex did not converge");
  }
  return report;
}

}  // namespace mfb
