#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mfb::lp {

/// minimize c^T x subject to A x = b, x >= 0, with A stored column-wise.
class LinearProgram {
 public:
  explicit LinearProgram(std::vector<double> rhs) : rhs_(std::move(rhs)) { starts_.push_back(0); }

  /// Returns the new column's index. Row indices must be < rows().
  std::size_t add_column(double cost, const std::vector<int>& rows, const std::vector<double>& values);

  int rows() const { return static_cast<int>(rhs_.size()); }
  std::size_t columns() const { return cost_.size(); }
  const std::vector<double>& rhs() const { return rhs_; }
  double cost(std::size_t j) const { return cost_[j]; }

  template <class F>
  void for_each_entry(std::size_t j, F&& f) const {
    for (std::size_t k = starts_[j]; k < starts_[j + 1]; ++k) f(row_index_[k], values_[k]);
  }

 private:
  std::vector<double> rhs_;
  std::vector<double> cost_;
  std::vector<std::size_t> starts_;
  std::vector<int> row_index_;
  std::vector<double> values_;
};

enum class Status { Optimal, Infeasible, IterationLimit };

std::string to_string(Status status);

struct Solution {
  Status status = Status::IterationLimit;
  double objective = 0.0;
  std::vector<double> x;
  /// Row duals y with reduced costs c - A^T y (phase two), or the phase-one
  /// Farkas vector (y^T A <= 0 on every column, y^T b > 0) when infeasible.
  std::vector<double> duals;
  double infeasibility = 0.0;
  long iterations = 0;
  double max_residual = 0.0;
};

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-9;
  long max_iterations = 1'000'000;
  int refactor_every = 64;
};

/// Two-phase revised simplex with an explicit dense basis inverse.
Solution solve(const LinearProgram& program, const Options& options = {});

}  // namespace mfb::lp
