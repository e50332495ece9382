#include "mfbounds/payoff.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "mfbounds/error.hpp"

namespace mfb {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

namespace ast {

NodePtr var(int index) { return std::make_shared<const Node>(Node{Variable{index}}); }
NodePtr constant(double value) { return std::make_shared<const Node>(Node{Constant{value}}); }

NodePtr neg(NodePtr operand) {
  if (const auto* c = std::get_if<Constant>(&operand->value)) return constant(-c->value);
  return std::make_shared<const Node>(Node{Negate{std::move(operand)}});
}

NodePtr binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  return std::make_shared<const Node>(Node{Binary{op, std::move(lhs), std::move(rhs)}});
}

NodePtr reduce(Reduction kind, std::vector<NodePtr> args) {
  require(!args.empty(), "reduction needs at least one argument");
  return std::make_shared<const Node>(Node{Reduce{kind, std::move(args)}});
}

NodePtr pos(NodePtr operand) { return std::make_shared<const Node>(Node{Positive{std::move(operand)}}); }

}  // namespace ast

bool structurally_equal(const Node& a, const Node& b) {
  if (a.value.index() != b.value.index()) return false;
  return std::visit(
      overloaded{
          [&](const Variable& x) { return x.index == std::get<Variable>(b.value).index; },
          [&](const Constant& x) {
            const double y = std::get<Constant>(b.value).value;
            return x.value == y && std::signbit(x.value) == std::signbit(y);
          },
          [&](const Negate& x) { return structurally_equal(*x.operand, *std::get<Negate>(b.value).operand); },
          [&](const Binary& x) {
            const auto& y = std::get<Binary>(b.value);
            return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) && structurally_equal(*x.rhs, *y.rhs);
          },
          [&](const Reduce& x) {
            const auto& y = std::get<Reduce>(b.value);
            if (x.kind != y.kind || x.args.size() != y.args.size()) return false;
            for (std::size_t i = 0; i < x.args.size(); ++i) {
              if (!structurally_equal(*x.args[i], *y.args[i])) return false;
            }
            return true;
          },
          [&](const Positive& x) {
            return structurally_equal(*x.operand, *std::get<Positive>(b.value).operand);
          },
      },
      a.value);
}

namespace {

int max_variable(const Node& node) {
  return std::visit(overloaded{
                        [](const Variable& x) { return x.index; },
                        [](const Constant&) { return 0; },
                        [](const Negate& x) { return max_variable(*x.operand); },
                        [](const Binary& x) { return std::max(max_variable(*x.lhs), max_variable(*x.rhs)); },
                        [](const Reduce& x) {
                          int m = 0;
                          for (const auto& a : x.args) m = std::max(m, max_variable(*a));
                          return m;
                        },
                        [](const Positive& x) { return max_variable(*x.operand); },
                    },
                    node.value);
}

void check_binding(const Node& node, int dimension) {
  std::visit(overloaded{
                 [&](const Variable& x) {
                   if (x.index < 1 || x.index > dimension) {
                     fail(ErrorKind::Binding, "variable x" + std::to_string(x.index) +
                                                  " is outside 1.." + std::to_string(dimension));
                   }
                 },
                 [](const Constant&) {},
                 [&](const Negate& x) { check_binding(*x.operand, dimension); },
                 [&](const Binary& x) {
                   check_binding(*x.lhs, dimension);
                   check_binding(*x.rhs, dimension);
                 },
                 [&](const Reduce& x) {
                   for (const auto& a : x.args) check_binding(*a, dimension);
                 },
                 [&](const Positive& x) { check_binding(*x.operand, dimension); },
             },
             node.value);
}

}  // namespace

PayoffExpr::PayoffExpr(NodePtr root, int dimension) : root_(std::move(root)), dimension_(dimension) {
  require(root_ != nullptr, "payoff expression has no root");
  require(dimension_ >= 1, "payoff dimension must be positive");
  check_binding(*root_, dimension_);
}

bool PayoffExpr::operator==(const PayoffExpr& other) const {
  return dimension_ == other.dimension_ && structurally_equal(*root_, *other.root_);
}

// ---------------------------------------------------------------------------
// Printing

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) fail(ErrorKind::Argument, "cannot format number");
  return std::string(buf, end);
}

namespace {

constexpr int kAdditive = 1;
constexpr int kMultiplicative = 2;
constexpr int kUnary = 3;
constexpr int kAtom = 4;

int precedence(const Node& node) {
  if (const auto* b = std::get_if<Binary>(&node.value)) {
    return (b->op == BinaryOp::Add || b->op == BinaryOp::Sub) ? kAdditive : kMultiplicative;
  }
  if (std::holds_alternative<Negate>(node.value)) return kUnary;
  if (const auto* c = std::get_if<Constant>(&node.value)) return std::signbit(c->value) ? kUnary : kAtom;
  return kAtom;
}

const char* reduction_name(Reduction kind) {
  switch (kind) {
    case Reduction::Max:
      return "max";
    case Reduction::Min:
      return "min";
    case Reduction::Sum:
      return "sum";
    case Reduction::Avg:
      return "avg";
  }
  return "?";
}

void print(const Node& node, std::string& out);

void print_operand(const Node& node, int min_precedence, std::string& out) {
  if (precedence(node) < min_precedence) {
    out += '(';
    print(node, out);
    out += ')';
  } else {
    print(node, out);
  }
}

void print(const Node& node, std::string& out) {
  std::visit(overloaded{
                 [&](const Variable& x) { out += 'x' + std::to_string(x.index); },
                 [&](const Constant& x) { out += format_number(x.value); },
                 [&](const Negate& x) {
                   out += '-';
                   print_operand(*x.operand, kUnary + 1, out);
                 },
                 [&](const Binary& x) {
                   const int p = precedence(node);
                   // Left-associative: the right operand needs parentheses at equal precedence.
                   print_operand(*x.lhs, p, out);
                   switch (x.op) {
                     case BinaryOp::Add:
                       out += " + ";
                       break;
                     case BinaryOp::Sub:
                       out += " - ";
                       break;
                     case BinaryOp::Mul:
                       out += " * ";
                       break;
                     case BinaryOp::Div:
                       out += " / ";
                       break;
                   }
                   print_operand(*x.rhs, p + 1, out);
                 },
                 [&](const Reduce& x) {
                   out += reduction_name(x.kind);
                   out += '(';
                   for (std::size_t i = 0; i < x.args.size(); ++i) {
                     if (i > 0) out += ", ";
                     print(*x.args[i], out);
                   }
                   out += ')';
                 },
                 [&](const Positive& x) {
                   out += '(';
                   print(*x.operand, out);
                   out += ")^+";
                 },
             },
             node.value);
}

}  // namespace

std::string PayoffExpr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError("empty payoff expression", 0);
    NodePtr node = expr();
    skip_space();
    if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    return node;
  }

 private:
  [[noreturn]] void error(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) error(std::string("expected '") + c + "' but input ended");
      error(std::string("expected '") + c + "'");
    }
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = ast::binary(BinaryOp::Add, lhs, term());
      } else if (accept('-')) {
        lhs = ast::binary(BinaryOp::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = ast::binary(BinaryOp::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = ast::binary(BinaryOp::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    skip_space();
    if (pos_ >= text_.size()) error("unexpected end of input");
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return ast::neg(factor());
    }
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      expect(')');
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == '^') {
        ++pos_;
        if (pos_ >= text_.size() || text_[pos_] != '+') error("expected '+' after '^'");
        ++pos_;
        return ast::pos(inner);
      }
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    error("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      const std::size_t digits = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (digits == pos_) error("malformed exponent");
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      error("malformed number");
    }
    return ast::constant(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int index = 0;
      const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec != std::errc()) {
        pos_ = start;
        error("variable index out of range");
      }
      return ast::var(index);
    }

    const bool is_pos = name == "pos";
    Reduction kind{};
    if (name == "max") {
      kind = Reduction::Max;
    } else if (name == "min") {
      kind = Reduction::Min;
    } else if (name == "sum") {
      kind = Reduction::Sum;
    } else if (name == "avg") {
      kind = Reduction::Avg;
    } else if (!is_pos) {
      pos_ = start;
      error("unknown identifier '" + std::string(name) + "'");
    }

    expect('(');
    std::vector<NodePtr> args;
    if (accept(')')) {
      pos_ -= 1;
      error(std::string(name) + " needs at least one argument");
    }
    args.push_back(expr());
    while (accept(',')) args.push_back(expr());
    expect(')');
    if (is_pos) {
      if (args.size() != 1) error("pos takes exactly one argument");
      return ast::pos(args.front());
    }
    return ast::reduce(kind, std::move(args));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

PayoffExpr parse_payoff(std::string_view text, int dimension) {
  require(dimension >= 1, "payoff dimension must be positive");
  return PayoffExpr(Parser(text).parse(), dimension);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

Eigen::ArrayXd evaluate(const Node& node, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::Index n = x.rows();
  return std::visit(
      overloaded{
          [&](const Variable& v) -> Eigen::ArrayXd { return x.col(v.index - 1).array(); },
          [&](const Constant& c) -> Eigen::ArrayXd { return Eigen::ArrayXd::Constant(n, c.value); },
          [&](const Negate& e) -> Eigen::ArrayXd { return -evaluate(*e.operand, x); },
          [&](const Binary& b) -> Eigen::ArrayXd {
            Eigen::ArrayXd lhs = evaluate(*b.lhs, x);
            const Eigen::ArrayXd rhs = evaluate(*b.rhs, x);
            switch (b.op) {
              case BinaryOp::Add:
                return lhs + rhs;
              case BinaryOp::Sub:
                return lhs - rhs;
              case BinaryOp::Mul:
                return lhs * rhs;
              case BinaryOp::Div:
                for (Eigen::Index r = 0; r < n; ++r) {
                  if (rhs[r] == 0.0) fail(ErrorKind::Evaluation, "division by zero in row " + std::to_string(r));
                }
                return lhs / rhs;
            }
            return lhs;
          },
          [&](const Reduce& red) -> Eigen::ArrayXd {
            Eigen::ArrayXd acc = evaluate(*red.args.front(), x);
            for (std::size_t i = 1; i < red.args.size(); ++i) {
              const Eigen::ArrayXd next = evaluate(*red.args[i], x);
              switch (red.kind) {
                case Reduction::Max:
                  acc = acc.max(next);
                  break;
                case Reduction::Min:
                  acc = acc.min(next);
                  break;
                case Reduction::Sum:
                case Reduction::Avg:
                  acc += next;
                  break;
              }
            }
            if (red.kind == Reduction::Avg) acc /= static_cast<double>(red.args.size());
            return acc;
          },
          [&](const Positive& p) -> Eigen::ArrayXd { return evaluate(*p.operand, x).max(0.0); },
      },
      node.value);
}

}  // namespace

Eigen::VectorXd eval_payoff(const PayoffExpr& expr, const Eigen::Ref<const Eigen::MatrixXd>& values) {
  if (values.cols() != expr.dimension()) {
    fail(ErrorKind::Argument, "batch has " + std::to_string(values.cols()) + " columns but payoff binds " +
                                  std::to_string(expr.dimension()) + " assets");
  }
  return evaluate(expr.root(), values).matrix();
}

Eigen::VectorXd eval_payoff(const PayoffExpr& expr, const SampleBatch& batch) {
  return eval_payoff(expr, batch.values);
}

double eval_payoff(const PayoffExpr& expr, std::span<const double> x) {
  const Eigen::Map<const Eigen::Matrix<double, 1, Eigen::Dynamic>> row(x.data(), static_cast<Eigen::Index>(x.size()));
  return eval_payoff(expr, Eigen::MatrixXd(row))[0];
}

// ---------------------------------------------------------------------------
// Builtins

PayoffKind payoff_kind_from_string(const std::string& name) {
  if (name == "call_on_max") return PayoffKind::CallOnMax;
  if (name == "call_on_min") return PayoffKind::CallOnMin;
  if (name == "put_on_min") return PayoffKind::PutOnMin;
  if (name == "basket_call") return PayoffKind::BasketCall;
  if (name == "vanilla_call") return PayoffKind::VanillaCall;
  if (name == "vanilla_put") return PayoffKind::VanillaPut;
  fail(ErrorKind::Config, "unknown payoff kind '" + name + "'");
}

std::string to_string(PayoffKind kind) {
  switch (kind) {
    case PayoffKind::CallOnMax:
      return "call_on_max";
    case PayoffKind::CallOnMin:
      return "call_on_min";
    case PayoffKind::PutOnMin:
      return "put_on_min";
    case PayoffKind::BasketCall:
      return "basket_call";
    case PayoffKind::VanillaCall:
      return "vanilla_call";
    case PayoffKind::VanillaPut:
      return "vanilla_put";
  }
  return "unknown";
}

PayoffExpr builtin(PayoffKind kind, const std::vector<int>& indices, double strike, int dimension) {
  require(!indices.empty(), "builtin payoff needs at least one asset index");
  for (int j : indices) require(j >= 1 && j <= dimension, "builtin asset index out of range");

  std::vector<NodePtr> vars;
  for (int j : indices) vars.push_back(ast::var(j));
  const NodePtr k = ast::constant(strike);
  auto call = [&](NodePtr underlying) { return ast::pos(ast::binary(BinaryOp::Sub, underlying, k)); };
  auto put = [&](NodePtr underlying) { return ast::pos(ast::binary(BinaryOp::Sub, k, underlying)); };

  switch (kind) {
    case PayoffKind::CallOnMax:
      return PayoffExpr(call(ast::reduce(Reduction::Max, vars)), dimension);
    case PayoffKind::CallOnMin:
      return PayoffExpr(call(ast::reduce(Reduction::Min, vars)), dimension);
    case PayoffKind::PutOnMin:
      return PayoffExpr(put(ast::reduce(Reduction::Min, vars)), dimension);
    case PayoffKind::BasketCall:
      return PayoffExpr(call(ast::reduce(Reduction::Avg, vars)), dimension);
    case PayoffKind::VanillaCall:
      require(indices.size() == 1, "vanilla payoffs take exactly one asset");
      return PayoffExpr(call(vars.front()), dimension);
    case PayoffKind::VanillaPut:
      require(indices.size() == 1, "vanilla payoffs take exactly one asset");
      return PayoffExpr(put(vars.front()), dimension);
  }
  fail(ErrorKind::Argument, "unknown payoff kind");
}

PayoffExpr negate(const PayoffExpr& expr) { return PayoffExpr(ast::neg(expr.root_ptr()), expr.dimension()); }

std::string instantiate_strike(std::string_view pattern, double strike) {
  std::string out;
  const std::string k = format_number(strike);
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern.compare(i, 3, "{K}") == 0) {
      out += k;
      i += 3;
    } else {
      out += pattern[i++];
    }
  }
  return out;
}

}  // namespace mfb
