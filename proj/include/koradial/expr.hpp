#pragma once

// Small infix expression language used to describe the weights and
// nonlinearities of a problem in configuration files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//
// `x` is the free variable; every other identifier is a late-bound parameter.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "koradial/error.hpp"

namespace koradial::expr {

enum class Op : std::uint8_t { Literal, Variable, Param, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class Builtin : std::uint8_t { Exp, Log, Sqrt, Abs, Min, Max, Pow };

struct Node {
  Op op = Op::Literal;
  Builtin fn = Builtin::Exp;
  double value = 0.0;
  std::string name;
  std::int32_t lhs = -1;
  std::int32_t rhs = -1;
  std::size_t offset = 0;  // 0-based byte offset of the node in the source
};

using Bindings = std::map<std::string, double, std::less<>>;

/// Immutable syntax tree. Copies share the node storage.
class Expression {
 public:
  Expression(std::shared_ptr<const std::vector<Node>> nodes, std::int32_t root);

  const Node& node(std::int32_t i) const { return (*nodes_)[static_cast<std::size_t>(i)]; }
  std::int32_t root() const { return root_; }
  std::span<const Node> nodes() const { return *nodes_; }

  /// Fully parenthesized rendering; reparses to a structurally identical tree.
  std::string to_string() const;
  std::string to_string(std::int32_t subtree) const;

  /// Names of every free parameter (identifiers other than `x`).
  std::set<std::string> parameters() const;

  bool structurally_equal(const Expression& other) const;

 private:
  std::shared_ptr<const std::vector<Node>> nodes_;
  std::int32_t root_;
};

class ParseError : public Error {
 public:
  enum class Kind { Syntax, UnknownFunction, UnbalancedParens, Empty };

  ParseError(Kind kind, std::size_t offset, std::vector<std::string> expected, const std::string& what);

  Kind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  Kind kind_;
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class EvalError : public Error {
 public:
  enum class Kind { Domain, Unbound };

  EvalError(Kind kind, std::size_t offset, std::string subexpression, const std::string& what);

  Kind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }
  const std::string& subexpression() const { return subexpression_; }

 private:
  Kind kind_;
  std::size_t offset_;
  std::string subexpression_;
};

Expression parse(std::string_view source);

double evaluate(const Expression& expr, double x, const Bindings& bindings = {});

/// An expression with its parameters resolved, compiled to a postfix program.
/// Calls are reentrant.
class BoundExpression {
 public:
  BoundExpression(const Expression& expr, const Bindings& bindings);

  double operator()(double x) const;

  const Expression& expression() const { return expr_; }

 private:
  struct Instr {
    Op op;
    Builtin fn;
    double value;
    std::int32_t node;
  };

  Expression expr_;
  std::vector<Instr> program_;
  std::size_t max_depth_ = 0;
};

struct SampleCheck {
  bool pass = true;
  std::optional<double> witness;  // first sampled point that failed
  double witness_value = 0.0;
  std::string reason;
  std::size_t samples = 0;
};

/// Chebyshev-spaced sampling of [0, R] (plus both endpoints) looking for a
/// negative value.
SampleCheck check_nonneg_sampled(const Expression& expr, double R, int n, const Bindings& bindings = {});

/// The sample points used by check_nonneg_sampled, ascending.
std::vector<double> chebyshev_samples(double R, int n);

}  // namespace koradial::expr
