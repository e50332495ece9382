#include "mfbounds/simplex.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "mfbounds/error.hpp"

namespace mfb::lp {

std::size_t LinearProgram::add_column(double cost, const std::vector<int>& rows, const std::vector<double>& values) {
  require(rows.size() == values.size(), "column rows and values differ in length");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] >= 0 && rows[k] < this->rows(), "column row index out of range");
    if (values[k] == 0.0) continue;
    row_index_.push_back(rows[k]);
    values_.push_back(values[k]);
  }
  cost_.push_back(cost);
  starts_.push_back(row_index_.size());
  return cost_.size() - 1;
}

std::string to_string(Status status) {
  switch (status) {
    case Status::Optimal:
      return "optimal";
    case Status::Infeasible:
      return "infeasible";
    case Status::IterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

namespace {

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const Options& opt)
      : lp_(lp), opt_(opt), m_(lp.rows()), n_(lp.columns()), sign_(m_), b_(m_) {
    for (int i = 0; i < m_; ++i) {
      sign_[i] = lp.rhs()[i] < 0.0 ? -1.0 : 1.0;
      b_[i] = std::abs(lp.rhs()[i]);
    }
    basis_.resize(m_);
    position_.assign(n_ + static_cast<std::size_t>(m_), -1);
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + static_cast<std::size_t>(i);
      position_[basis_[i]] = i;
    }
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = b_;
  }

  Solution run() {
    Solution sol;
    phase_ = 1;
    if (!iterate(sol)) return finish(sol, Status::IterationLimit);
    const double infeasibility = phase_objective();
    const double scale = 1.0 + b_.lpNorm<Eigen::Infinity>();
    if (infeasibility > opt_.feasibility_tol * scale) {
      sol.infeasibility = infeasibility;
      const Eigen::VectorXd y = duals();
      sol.duals.resize(static_cast<std::size_t>(m_));
      for (int i = 0; i < m_; ++i) sol.duals[i] = sign_[i] * y[i];
      return finish(sol, Status::Infeasible);
    }
    phase_ = 2;
    if (!iterate(sol)) return finish(sol, Status::IterationLimit);
    const Eigen::VectorXd y = duals();
    sol.duals.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) sol.duals[i] = sign_[i] * y[i];
    return finish(sol, Status::Optimal);
  }

 private:
  bool artificial(std::size_t j) const { return j >= n_; }

  double cost(std::size_t j) const {
    if (phase_ == 1) return artificial(j) ? 1.0 : 0.0;
    return artificial(j) ? 0.0 : lp_.cost(j);
  }

  /// Dense column of the sign-normalized constraint matrix.
  Eigen::VectorXd column(std::size_t j) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
    if (artificial(j)) {
      a[static_cast<Eigen::Index>(j - n_)] = 1.0;
    } else {
      lp_.for_each_entry(j, [&](int r, double v) { a[r] = sign_[r] * v; });
    }
    return a;
  }

  Eigen::VectorXd duals() const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost(basis_[i]);
    return binv_.transpose() * cb;
  }

  double phase_objective() const {
    double total = 0.0;
    for (int i = 0; i < m_; ++i) total += cost(basis_[i]) * xb_[i];
    return total;
  }

  void refactor() {
    Eigen::MatrixXd basis_matrix(m_, m_);
    for (int i = 0; i < m_; ++i) basis_matrix.col(i) = column(basis_[i]);
    binv_ = basis_matrix.partialPivLu().inverse();
    xb_ = binv_ * b_;
    for (int i = 0; i < m_; ++i) {
      if (xb_[i] < 0.0 && xb_[i] > -opt_.feasibility_tol) xb_[i] = 0.0;
    }
  }

  /// Returns false on hitting the iteration limit.
  bool iterate(Solution& sol) {
    int degenerate_streak = 0;
    long since_refactor = 0;
    for (;;) {
      if (sol.iterations >= opt_.max_iterations) return false;
      if (since_refactor >= opt_.refactor_every) {
        refactor();
        since_refactor = 0;
      }
      const bool bland = degenerate_streak > 50;
      const Eigen::VectorXd y = duals();

      // Pricing.
      std::size_t entering = std::numeric_limits<std::size_t>::max();
      double best = -opt_.optimality_tol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (position_[j] >= 0) continue;
        double d = cost(j);
        lp_.for_each_entry(j, [&](int r, double v) { d -= y[r] * sign_[r] * v; });
        if (d < best) {
          best = d;
          entering = j;
          if (bland) break;
        }
      }
      if (phase_ == 1 && entering == std::numeric_limits<std::size_t>::max()) return true;
      if (entering == std::numeric_limits<std::size_t>::max()) return true;

      const Eigen::VectorXd w = binv_ * column(entering);

      // Harris two-pass ratio test. Basic artificials in phase two must stay at zero.
      int leave = -1;
      double theta_max = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (phase_ == 2 && artificial(basis_[i]) && std::abs(w[i]) > opt_.pivot_tol) {
          theta_max = 0.0;
          break;
        }
        if (w[i] > opt_.pivot_tol) theta_max = std::min(theta_max, (xb_[i] + opt_.feasibility_tol) / w[i]);
      }
      if (!std::isfinite(theta_max)) fail(ErrorKind::Argument, "linear program is unbounded");
      double best_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const bool stuck_artificial = phase_ == 2 && artificial(basis_[i]) && std::abs(w[i]) > opt_.pivot_tol;
        if (!stuck_artificial && w[i] <= opt_.pivot_tol) continue;
        const double ratio = stuck_artificial ? 0.0 : xb_[i] / w[i];
        if (ratio > theta_max) continue;
        const double magnitude = std::abs(w[i]);
        if (bland) {
          if (leave < 0 || basis_[i] < basis_[leave]) leave = i;
        } else if (magnitude > best_pivot) {
          best_pivot = magnitude;
          leave = i;
        }
      }
      if (leave < 0) fail(ErrorKind::Argument, "simplex ratio test found no pivot");

      const double theta = std::max(0.0, artificial(basis_[leave]) && phase_ == 2 ? 0.0 : xb_[leave] / w[leave]);
      xb_ -= theta * w;
      xb_[leave] = theta;
      for (int i = 0; i < m_; ++i) {
        if (xb_[i] < 0.0) xb_[i] = 0.0;
      }

      const double pivot = w[leave];
      binv_.row(leave) /= pivot;
      Eigen::VectorXd wl = w;
      wl[leave] = 0.0;
      binv_.noalias() -= wl * binv_.row(leave);

      position_[basis_[leave]] = -1;
      basis_[leave] = entering;
      position_[entering] = leave;

      degenerate_streak = theta <= 1e-12 ? degenerate_streak + 1 : 0;
      ++since_refactor;
      ++sol.iterations;
    }
  }

  Solution finish(Solution& sol, Status status) {
    refactor();
    sol.status = status;
    sol.x.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i) {
      if (!artificial(basis_[i])) sol.x[basis_[i]] = xb_[i];
    }
    double objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) objective += lp_.cost(j) * sol.x[j];
    sol.objective = objective;
    std::vector<double> ax(static_cast<std::size_t>(m_), 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      if (sol.x[j] == 0.0) continue;
      lp_.for_each_entry(j, [&](int r, double v) { ax[r] += v * sol.x[j]; });
    }
    sol.max_residual = 0.0;
    for (int i = 0; i < m_; ++i) sol.max_residual = std::max(sol.max_residual, std::abs(ax[i] - lp_.rhs()[i]));
    return sol;
  }

  const LinearProgram& lp_;
  Options opt_;
  int m_;
  std::size_t n_;
  Eigen::VectorXd sign_;
  Eigen::VectorXd b_;
  std::vector<std::size_t> basis_;
  std::vector<int> position_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  int phase_ = 1;
};

}  // namespace

Solution solve(const LinearProgram& program, const Options& options) {
  require(program.rows() >= 1, "linear program needs at least one row");
  return Simplex(program, options).run();
}

}  // namespace mfb::lp
