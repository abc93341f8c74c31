#include "koradial/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <utility>

namespace koradial::expr {

namespace {

struct BuiltinInfo {
  std::string_view name;
  Builtin fn;
  int arity;
};

constexpr BuiltinInfo kBuiltins[] = {
    {"exp", Builtin::Exp, 1}, {"log", Builtin::Log, 1}, {"sqrt", Builtin::Sqrt, 1}, {"abs", Builtin::Abs, 1},
    {"min", Builtin::Min, 2}, {"max", Builtin::Max, 2}, {"pow", Builtin::Pow, 2},
};

const BuiltinInfo* find_builtin(std::string_view name) {
  for (const auto& b : kBuiltins) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

const BuiltinInfo& builtin_info(Builtin fn) {
  for (const auto& b : kBuiltins) {
    if (b.fn == fn) return b;
  }
  return kBuiltins[0];
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expression run() {
    skip_ws();
    if (pos_ == src_.size()) {
      throw ParseError(ParseError::Kind::Empty, 0, {"expression"}, "empty expression");
    }
    std::int32_t root = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) {
      if (src_[pos_] == ')') {
        throw ParseError(ParseError::Kind::UnbalancedParens, pos_, {"end of input"},
                         "unbalanced parentheses: unexpected ')' at offset " + std::to_string(pos_));
      }
      fail({"operator", "end of input"});
    }
    return Expression(std::make_shared<const std::vector<Node>>(std::move(nodes_)), root);
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Node> nodes_;
  int depth_ = 0;

  static constexpr int kMaxDepth = 256;

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string found = pos_ < src_.size() ? "'" + std::string(1, src_[pos_]) + "'" : "end of input";
    throw ParseError(ParseError::Kind::Syntax, pos_, expected,
                     "syntax error at offset " + std::to_string(pos_) + ": expected " + join(expected) + ", found " +
                         found);
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  std::int32_t push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::int32_t binary(Op op, std::int32_t lhs, std::int32_t rhs, std::size_t offset) {
    Node n;
    n.op = op;
    n.lhs = lhs;
    n.rhs = rhs;
    n.offset = offset;
    return push(std::move(n));
  }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) {
        throw ParseError(ParseError::Kind::Syntax, p.pos_, {}, "expression nested too deeply");
      }
    }
    ~DepthGuard() { --p.depth_; }
  };

  std::int32_t parse_expr() {
    DepthGuard guard(*this);
    std::int32_t lhs = parse_term();
    while (true) {
      skip_ws();
      if (pos_ >= src_.size()) break;
      char c = src_[pos_];
      if (c != '+' && c != '-') break;
      std::size_t at = pos_++;
      std::int32_t rhs = parse_term();
      lhs = binary(c == '+' ? Op::Add : Op::Sub, lhs, rhs, at);
    }
    return lhs;
  }

  std::int32_t parse_term() {
    std::int32_t lhs = parse_unary();
    while (true) {
      skip_ws();
      if (pos_ >= src_.size()) break;
      char c = src_[pos_];
      if (c != '*' && c != '/') break;
      std::size_t at = pos_++;
      std::int32_t rhs = parse_unary();
      lhs = binary(c == '*' ? Op::Mul : Op::Div, lhs, rhs, at);
    }
    return lhs;
  }

  std::int32_t parse_unary() {
    DepthGuard guard(*this);
    skip_ws();
    if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
      char c = src_[pos_];
      std::size_t at = pos_++;
      std::int32_t operand = parse_unary();
      if (c == '+') return operand;
      Node n;
      n.op = Op::Neg;
      n.lhs = operand;
      n.offset = at;
      return push(std::move(n));
    }
    return parse_power();
  }

  std::int32_t parse_power() {
    std::int32_t base = parse_primary();
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '^') {
      std::size_t at = pos_++;
      std::int32_t exponent = parse_unary();
      return binary(Op::Pow, base, exponent, at);
    }
    return base;
  }

  static bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

  std::int32_t parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail({"number", "identifier", "'('"});
    char c = src_[pos_];
    std::size_t at = pos_;

    if (c == '(') {
      ++pos_;
      std::int32_t inner = parse_expr();
      if (!peek(')')) {
        if (pos_ >= src_.size()) {
          throw ParseError(ParseError::Kind::UnbalancedParens, pos_, {"')'"},
                           "unbalanced parentheses: '(' at offset " + std::to_string(at) + " is never closed");
        }
        fail({"')'", "operator"});
      }
      ++pos_;
      return inner;
    }

    if ((c >= '0' && c <= '9') || c == '.') return parse_number();

    if (ident_start(c)) {
      while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
      std::string name(src_.substr(at, pos_ - at));
      if (peek('(')) return parse_call(name, at);
      Node n;
      n.op = name == "x" ? Op::Variable : Op::Param;
      n.name = std::move(name);
      n.offset = at;
      return push(std::move(n));
    }

    if (c == ')') {
      throw ParseError(ParseError::Kind::UnbalancedParens, pos_, {"number", "identifier", "'('"},
                       "unbalanced parentheses: unexpected ')' at offset " + std::to_string(pos_));
    }
    fail({"number", "identifier", "'('"});
  }

  std::int32_t parse_number() {
    std::size_t at = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      std::size_t start = end;
      while (end < src_.size() && src_[end] >= '0' && src_[end] <= '9') ++end;
      return end - start;
    };
    std::size_t mantissa = digits();
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = at;
      fail({"number"});
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t save = end++;
      if (end < src_.size() && (src_[end] == '+' || src_[end] == '-')) ++end;
      if (digits() == 0) end = save;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + at, src_.data() + end, value);
    if (ec != std::errc() || ptr != src_.data() + end || !std::isfinite(value)) {
      throw ParseError(ParseError::Kind::Syntax, at, {"finite number"},
                       "number out of range at offset " + std::to_string(at));
    }
    pos_ = end;
    Node n;
    n.op = Op::Literal;
    n.value = value;
    n.offset = at;
    return push(std::move(n));
  }

  std::int32_t parse_call(const std::string& name, std::size_t at) {
    const BuiltinInfo* info = find_builtin(name);
    if (!info) {
      throw ParseError(ParseError::Kind::UnknownFunction, at, {"exp", "log", "sqrt", "abs", "min", "max", "pow"},
                       "unknown function '" + name + "' at offset " + std::to_string(at));
    }
    ++pos_;  // '('
    std::vector<std::int32_t> args;
    args.push_back(parse_expr());
    while (peek(',')) {
      ++pos_;
      args.push_back(parse_expr());
    }
    if (!peek(')')) {
      if (pos_ >= src_.size()) {
        throw ParseError(ParseError::Kind::UnbalancedParens, pos_, {"')'"},
                         "unbalanced parentheses: call to '" + name + "' at offset " + std::to_string(at) +
                             " is never closed");
      }
      fail({"','", "')'"});
    }
    if (static_cast<int>(args.size()) != info->arity) {
      throw ParseError(ParseError::Kind::Syntax, at, {std::to_string(info->arity) + " argument(s)"},
                       "function '" + name + "' at offset " + std::to_string(at) + " takes " +
                           std::to_string(info->arity) + " argument(s), got " + std::to_string(args.size()));
    }
    ++pos_;
    Node n;
    n.op = Op::Call;
    n.fn = info->fn;
    n.name = name;
    n.lhs = args[0];
    n.rhs = args.size() > 1 ? args[1] : -1;
    n.offset = at;
    return push(std::move(n));
  }
};

[[noreturn]] void domain_error(const Expression& e, std::int32_t node, const std::string& what) {
  std::string sub = e.to_string(node);
  throw EvalError(EvalError::Kind::Domain, e.node(node).offset, sub,
                  "domain error: " + what + " in '" + sub + "' at offset " + std::to_string(e.node(node).offset));
}

double checked_pow(const Expression& e, std::int32_t node, double base, double exponent) {
  if (base == 0.0 && exponent < 0.0) domain_error(e, node, "zero raised to a negative power");
  if (base < 0.0 && std::trunc(exponent) != exponent) {
    domain_error(e, node, "negative base raised to a non-integer power");
  }
  return std::pow(base, exponent);
}

double apply(const Expression& e, std::int32_t node, Op op, Builtin fn, double l, double r) {
  switch (op) {
    case Op::Neg:
      return -l;
    case Op::Add:
      return l + r;
    case Op::Sub:
      return l - r;
    case Op::Mul:
      return l * r;
    case Op::Div:
      if (r == 0.0) domain_error(e, node, "division by zero");
      return l / r;
    case Op::Pow:
      return checked_pow(e, node, l, r);
    case Op::Call:
      switch (fn) {
        case Builtin::Exp:
          return std::exp(l);
        case Builtin::Log:
          if (!(l > 0.0)) domain_error(e, node, "logarithm of a nonpositive number");
          return std::log(l);
        case Builtin::Sqrt:
          if (l < 0.0) domain_error(e, node, "square root of a negative number");
          return std::sqrt(l);
        case Builtin::Abs:
          return std::abs(l);
        case Builtin::Min:
          return std::min(l, r);
        case Builtin::Max:
          return std::max(l, r);
        case Builtin::Pow:
          return checked_pow(e, node, l, r);
      }
      break;
    default:
      break;
  }
  return 0.0;
}

}  // namespace

ParseError::ParseError(Kind kind, std::size_t offset, std::vector<std::string> expected, const std::string& what)
    : Error(what), kind_(kind), offset_(offset), expected_(std::move(expected)) {}

EvalError::EvalError(Kind kind, std::size_t offset, std::string subexpression, const std::string& what)
    : Error(what), kind_(kind), offset_(offset), subexpression_(std::move(subexpression)) {}

Expression::Expression(std::shared_ptr<const std::vector<Node>> nodes, std::int32_t root)
    : nodes_(std::move(nodes)), root_(root) {}

std::string Expression::to_string() const { return to_string(root_); }

std::string Expression::to_string(std::int32_t i) const {
  const Node& n = node(i);
  switch (n.op) {
    case Op::Literal:
      return format_number(n.value);
    case Op::Variable:
    case Op::Param:
      return n.name;
    case Op::Neg:
      return "(-" + to_string(n.lhs) + ")";
    case Op::Call: {
      std::string out = std::string(builtin_info(n.fn).name) + "(" + to_string(n.lhs);
      if (n.rhs >= 0) out += ", " + to_string(n.rhs);
      return out + ")";
    }
    default:
      break;
  }
  const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? " * " : n.op == Op::Div ? " / " : " ^ ";
  return "(" + to_string(n.lhs) + sym + to_string(n.rhs) + ")";
}

std::set<std::string> Expression::parameters() const {
  std::set<std::string> out;
  for (const auto& n : *nodes_) {
    if (n.op == Op::Param) out.insert(n.name);
  }
  return out;
}

bool Expression::structurally_equal(const Expression& other) const {
  auto eq = [&](auto&& self, std::int32_t a, std::int32_t b) -> bool {
    if (a < 0 || b < 0) return a == b;
    const Node& x = node(a);
    const Node& y = other.node(b);
    if (x.op != y.op) return false;
    if (x.op == Op::Literal && x.value != y.value) return false;
    if ((x.op == Op::Param || x.op == Op::Variable) && x.name != y.name) return false;
    if (x.op == Op::Call && x.fn != y.fn) return false;
    return self(self, x.lhs, y.lhs) && self(self, x.rhs, y.rhs);
  };
  return eq(eq, root_, other.root_);
}

Expression parse(std::string_view source) { return Parser(source).run(); }

double evaluate(const Expression& expr, double x, const Bindings& bindings) {
  auto eval = [&](auto&& self, std::int32_t i) -> double {
    const Node& n = expr.node(i);
    switch (n.op) {
      case Op::Literal:
        return n.value;
      case Op::Variable:
        return x;
      case Op::Param: {
        auto it = bindings.find(n.name);
        if (it == bindings.end()) {
          throw EvalError(EvalError::Kind::Unbound, n.offset, n.name,
                          "unbound identifier '" + n.name + "' at offset " + std::to_string(n.offset));
        }
        return it->second;
      }
      default:
        break;
    }
    double l = self(self, n.lhs);
    double r = n.rhs >= 0 ? self(self, n.rhs) : 0.0;
    return apply(expr, i, n.op, n.fn, l, r);
  };
  return eval(eval, expr.root());
}

BoundExpression::BoundExpression(const Expression& expr, const Bindings& bindings) : expr_(expr) {
  std::size_t depth = 0;
  auto emit = [&](auto&& self, std::int32_t i) -> void {
    const Node& n = expr.node(i);
    switch (n.op) {
      case Op::Literal:
        program_.push_back({Op::Literal, n.fn, n.value, i});
        ++depth;
        break;
      case Op::Variable:
        program_.push_back({Op::Variable, n.fn, 0.0, i});
        ++depth;
        break;
      case Op::Param: {
        auto it = bindings.find(n.name);
        if (it == bindings.end()) {
          throw EvalError(EvalError::Kind::Unbound, n.offset, n.name,
                          "unbound identifier '" + n.name + "' at offset " + std::to_string(n.offset));
        }
        program_.push_back({Op::Literal, n.fn, it->second, i});
        ++depth;
        break;
      }
      default:
        self(self, n.lhs);
        if (n.rhs >= 0) self(self, n.rhs);
        program_.push_back({n.op, n.fn, 0.0, i});
        if (n.rhs >= 0) --depth;
        break;
    }
    max_depth_ = std::max(max_depth_, depth);
  };
  emit(emit, expr.root());
}

double BoundExpression::operator()(double x) const {
  constexpr std::size_t kInline = 32;
  double inline_stack[kInline] = {};
  std::vector<double> heap;
  double* stack = inline_stack;
  if (max_depth_ > kInline) {
    heap.resize(max_depth_);
    stack = heap.data();
  }
  std::size_t top = 0;
  for (const Instr& in : program_) {
    switch (in.op) {
      case Op::Literal:
        stack[top++] = in.value;
        break;
      case Op::Variable:
        stack[top++] = x;
        break;
      case Op::Neg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Op::Add:
        --top;
        stack[top - 1] += stack[top];
        break;
      case Op::Sub:
        --top;
        stack[top - 1] -= stack[top];
        break;
      case Op::Mul:
        --top;
        stack[top - 1] *= stack[top];
        break;
      default: {
        bool binary = expr_.node(in.node).rhs >= 0;
        double r = 0.0;
        if (binary) r = stack[--top];
        stack[top - 1] = apply(expr_, in.node, in.op, in.fn, stack[top - 1], r);
        break;
      }
    }
  }
  return stack[0];
}

std::vector<double> chebyshev_samples(double R, int n) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(n) + 2);
  pts.push_back(0.0);
  for (int k = 0; k < n; ++k) {
    double theta = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * n);
    pts.push_back(0.5 * R * (1.0 - std::cos(theta)));
  }
  pts.push_back(R);
  std::sort(pts.begin(), pts.end());
  return pts;
}

SampleCheck check_nonneg_sampled(const Expression& expr, double R, int n, const Bindings& bindings) {
  if (n < 2) throw InvalidArgument("check_nonneg_sampled: need at least 2 samples");
  if (!(R > 0.0)) throw InvalidArgument("check_nonneg_sampled: domain [0,R] needs R > 0");
  SampleCheck out;
  auto pts = chebyshev_samples(R, n);
  out.samples = pts.size();
  try {
    BoundExpression f(expr, bindings);
    for (double x : pts) {
      double v = f(x);
      if (!(v >= 0.0)) {
        out.pass = false;
        out.witness = x;
        out.witness_value = v;
        out.reason = std::isnan(v) ? "value is NaN" : "negative value";
        return out;
      }
    }
  } catch (const EvalError& e) {
    out.pass = false;
    out.reason = e.what();
  }
  return out;
}

}  // namespace koradial::expr
