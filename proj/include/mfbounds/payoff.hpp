#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mfbounds/market.hpp"

namespace mfb {

struct Node;
using NodePtr = std::shared_ptr<const Node>;

enum class BinaryOp { Add, Sub, Mul, Div };
enum class Reduction { Max, Min, Sum, Avg };

struct Variable {
  int index;  // 1-based asset index
};
struct Constant {
  double value;
};
struct Negate {
  NodePtr operand;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};
struct Reduce {
  Reduction kind;
  std::vector<NodePtr> args;
};
struct Positive {
  NodePtr operand;
};

struct Node {
  std::variant<Variable, Constant, Negate, Binary, Reduce, Positive> value;
};

bool structurally_equal(const Node& a, const Node& b);

namespace ast {
NodePtr var(int index);
NodePtr constant(double value);
/// Folds negated constants so a negative literal has exactly one representation.
NodePtr neg(NodePtr operand);
NodePtr binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
NodePtr reduce(Reduction kind, std::vector<NodePtr> args);
NodePtr pos(NodePtr operand);
}  // namespace ast

/// Immutable payoff expression over x1..xd.
class PayoffExpr {
 public:
  PayoffExpr(NodePtr root, int dimension);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  int dimension() const { return dimension_; }

  /// Canonical text: minimal parentheses, '.'-decimal numbers, "(e)^+" for pos.
  std::string to_string() const;

  bool operator==(const PayoffExpr& other) const;

 private:
  NodePtr root_;
  int dimension_;
};

/// expr := term (('+'|'-') term)*
/// term := factor (('*'|'/') factor)*
/// factor := number | 'x'INT | fncall | '(' expr ')' ['^+'] | '-' factor
/// fncall := ('max'|'min'|'sum'|'avg'|'pos') '(' expr (',' expr)* ')'
PayoffExpr parse_payoff(std::string_view text, int dimension);

/// Evaluates on every row of `values` (n x d).
Eigen::VectorXd eval_payoff(const PayoffExpr& expr, const Eigen::Ref<const Eigen::MatrixXd>& values);
Eigen::VectorXd eval_payoff(const PayoffExpr& expr, const SampleBatch& batch);
double eval_payoff(const PayoffExpr& expr, std::span<const double> x);

enum class PayoffKind { CallOnMax, CallOnMin, PutOnMin, BasketCall, VanillaCall, VanillaPut };

PayoffKind payoff_kind_from_string(const std::string& name);
std::string to_string(PayoffKind kind);

/// Indices are 1-based asset numbers.
PayoffExpr builtin(PayoffKind kind, const std::vector<int>& indices, double strike, int dimension);

PayoffExpr negate(const PayoffExpr& expr);

/// Replaces every "{K}" in `pattern` with the canonical rendering of `strike`.
std::string instantiate_strike(std::string_view pattern, double strike);

/// Shortest round-trip decimal rendering used by the canonical printer.
std::string format_number(double value);

}  // namespace mfb
