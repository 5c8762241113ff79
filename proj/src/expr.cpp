#include "asyncnet/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>

#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"

namespace asyncnet {

namespace {

struct FunctionInfo {
  Function f;
  std::string_view name;
  int arity;
};

constexpr std::array<FunctionInfo, 10> kFunctions{{
    {Function::Sin, "sin", 1},
    {Function::Cos, "cos", 1},
    {Function::Tan, "tan", 1},
    {Function::Exp, "exp", 1},
    {Function::Log, "log", 1},
    {Function::Abs, "abs", 1},
    {Function::Min, "min", 2},
    {Function::Max, "max", 2},
    {Function::Mod2Pi, "mod2pi", 1},
    {Function::CircDist, "circ_dist", 2},
}};

bool is_comparison(Op op) {
  return op == Op::Less || op == Op::LessEq || op == Op::Greater ||
         op == Op::GreaterEq || op == Op::Equal || op == Op::NotEqual;
}

bool is_connective(Op op) { return op == Op::Not || op == Op::And || op == Op::Or; }

std::string_view op_symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Less: return "<";
    case Op::LessEq: return "<=";
    case Op::Greater: return ">";
    case Op::GreaterEq: return ">=";
    case Op::Equal: return "==";
    case Op::NotEqual: return "!=";
    case Op::And: return "and";
    case Op::Or: return "or";
    default: return "?";
  }
}

// Printing precedence; higher binds tighter.
int precedence(const Expression& e) {
  switch (e.op()) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Not: return 3;
    case Op::Less:
    case Op::LessEq:
    case Op::Greater:
    case Op::GreaterEq:
    case Op::Equal:
    case Op::NotEqual: return 4;
    case Op::Add:
    case Op::Sub: return 5;
    case Op::Mul:
    case Op::Div: return 6;
    case Op::Neg: return 7;
    case Op::Literal: return std::signbit(e.value()) ? 7 : 8;
    default: return 8;
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

// ---------------------------------------------------------------- parser

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expression parse_all() {
    skip_ws();
    if (pos_ >= src_.size()) fail({"expression"}, "empty expression");
    Expression e = parse_or();
    skip_ws();
    if (pos_ < src_.size()) fail({"operator", "end of input"}, "unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& what) {
    throw SyntaxError(pos_, std::move(expected), what);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool peek_is(std::string_view tok) {
    skip_ws();
    return src_.substr(pos_, tok.size()) == tok;
  }

  bool accept(std::string_view tok) {
    if (!peek_is(tok)) return false;
    pos_ += tok.size();
    return true;
  }

  // Keyword match requires a non-identifier character afterwards.
  bool accept_word(std::string_view word) {
    skip_ws();
    if (src_.substr(pos_, word.size()) != word) return false;
    std::size_t after = pos_ + word.size();
    if (after < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[after])) ||
                                src_[after] == '_'))
      return false;
    pos_ = after;
    return true;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail({std::string(tok)}, "expected '" + std::string(tok) + "'");
  }

  Expression parse_or() {
    Expression lhs = parse_and();
    while (accept_word("or") || accept("||")) lhs = Expression::binary(Op::Or, lhs, parse_and());
    return lhs;
  }

  Expression parse_and() {
    Expression lhs = parse_not();
    while (accept_word("and") || accept("&&")) lhs = Expression::binary(Op::And, lhs, parse_not());
    return lhs;
  }

  Expression parse_not() {
    if (accept_word("not")) return Expression::unary(Op::Not, parse_not());
    skip_ws();
    if (peek_is("!") && !peek_is("!=")) {
      ++pos_;
      return Expression::unary(Op::Not, parse_not());
    }
    return parse_cmp();
  }

  Expression parse_cmp() {
    Expression lhs = parse_sum();
    static constexpr std::array<std::pair<std::string_view, Op>, 7> kOps{{
        {"<=", Op::LessEq},
        {">=", Op::GreaterEq},
        {"==", Op::Equal},
        {"!=", Op::NotEqual},
        {"<", Op::Less},
        {">", Op::Greater},
        {"=", Op::Equal},
    }};
    for (const auto& [tok, op] : kOps) {
      if (accept(tok)) {
        Expression rhs = parse_sum();
        return Expression::binary(op, lhs, rhs);
      }
    }
    return lhs;
  }

  Expression parse_sum() {
    Expression lhs = parse_product();
    for (;;) {
      if (accept("+")) {
        lhs = Expression::binary(Op::Add, lhs, parse_product());
      } else if (accept("-")) {
        lhs = Expression::binary(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expression parse_product() {
    Expression lhs = parse_unary();
    for (;;) {
      if (accept("*")) {
        lhs = Expression::binary(Op::Mul, lhs, parse_unary());
      } else if (accept("/")) {
        lhs = Expression::binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expression parse_unary() {
    if (accept("-")) {
      if (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                                 src_[pos_] == '.')) {
        return Expression::literal(-parse_number());
      }
      return Expression::unary(Op::Neg, parse_unary());
    }
    return parse_primary();
  }

  double parse_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) {
      pos_ = start;
      fail({"number"}, "malformed number");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = mark;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      pos_ = start;
      fail({"number"}, "malformed number");
    }
    return value;
  }

  std::string parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  long parse_index() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    long v = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (start == pos_ || ec != std::errc()) {
      pos_ = start;
      fail({"integer index"}, "expected integer index");
    }
    return v;
  }

  Expression parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail({"number", "name", "("}, "unexpected end of input");
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return Expression::literal(parse_number());
    }
    if (c == '(') {
      ++pos_;
      Expression inner = parse_or();
      expect(")");
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      std::string ident = parse_identifier();
      if (ident == "and" || ident == "or" || ident == "not") {
        pos_ = start;
        fail({"number", "name", "("}, "unexpected keyword '" + ident + "'");
      }
      if (auto f = function_by_name(ident)) {
        expect("(");
        std::vector<Expression> args;
        args.push_back(parse_or());
        while (accept(",")) args.push_back(parse_or());
        expect(")");
        if (static_cast<int>(args.size()) != function_arity(*f)) {
          pos_ = start;
          fail({}, ident + " takes " + std::to_string(function_arity(*f)) + " argument(s)");
        }
        return Expression::call(*f, std::move(args));
      }
      if (ident == "x" && peek_is("[")) {
        expect("[");
        long node = parse_index();
        expect("]");
        expect("[");
        long comp = parse_index();
        expect("]");
        return Expression::variable("x[" + std::to_string(node) + "][" + std::to_string(comp) + "]");
      }
      return Expression::variable(ident);
    }
    fail({"number", "name", "("}, std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- printer

void print_into(const Expression& e, std::string& out);

void print_operand(const Expression& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print_into(e, out);
    out += ')';
  } else {
    print_into(e, out);
  }
}

void print_into(const Expression& e, std::string& out) {
  switch (e.op()) {
    case Op::Literal:
      out += format_number(e.value());
      return;
    case Op::Variable:
      out += e.name();
      return;
    case Op::Neg: {
      out += '-';
      const Expression& a = e.args()[0];
      // Keep the negation node distinct from a negative literal.
      if (a.op() == Op::Literal && !std::signbit(a.value())) {
        out += '(';
        print_into(a, out);
        out += ')';
      } else {
        print_operand(a, 7, out);
      }
      return;
    }
    case Op::Not:
      out += "not ";
      print_operand(e.args()[0], 3, out);
      return;
    case Op::Call: {
      out += function_name(e.function());
      out += '(';
      bool first = true;
      for (const auto& a : e.args()) {
        if (!first) out += ", ";
        first = false;
        print_into(a, out);
      }
      out += ')';
      return;
    }
    default: {
      int p = precedence(e);
      // Left-associative chains; comparisons do not chain at all.
      int left_min = is_comparison(e.op()) ? p + 1 : p;
      print_operand(e.args()[0], left_min, out);
      out += ' ';
      out += op_symbol(e.op());
      out += ' ';
      print_operand(e.args()[1], p + 1, out);
      return;
    }
  }
}

// ---------------------------------------------------------------- evaluation

double apply_function(Function f, double a, double b, const Expression& where) {
  switch (f) {
    case Function::Sin: return circle::sin(a);
    case Function::Cos: return circle::cos(a);
    case Function::Tan: return circle::tan(a);
    case Function::Exp: return std::exp(a);
    case Function::Log:
      if (!(a > 0.0)) throw EvalError("log of nonpositive value", print(where));
      return std::log(a);
    case Function::Abs: return std::fabs(a);
    case Function::Min: return std::min(a, b);
    case Function::Max: return std::max(a, b);
    case Function::Mod2Pi: {
      double r = std::fmod(a, circle::kTwoPi);
      if (r < 0.0) r += circle::kTwoPi;
      if (r >= circle::kTwoPi) r = 0.0;
      return r;
    }
    case Function::CircDist: return circle::distance(a, b);
  }
  return 0.0;
}

double apply_arith(Op op, double a, double b, const Expression& where) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
      if (b == 0.0) throw EvalError("division by zero", print(where));
      return a / b;
    default: return 0.0;
  }
}

bool apply_compare(Op op, double a, double b) {
  switch (op) {
    case Op::Less: return a < b;
    case Op::LessEq: return a <= b;
    case Op::Greater: return a > b;
    case Op::GreaterEq: return a >= b;
    case Op::Equal: return a == b;
    case Op::NotEqual: return a != b;
    default: return false;
  }
}

struct TreeEvaluator {
  const Lookup& lookup;

  double real(const Expression& e) const {
    switch (e.op()) {
      case Op::Literal: return e.value();
      case Op::Variable: {
        auto v = lookup(e.name());
        if (!v) throw EvalError("unbound variable '" + e.name() + "'", e.name());
        return *v;
      }
      case Op::Neg: return -real(e.args()[0]);
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: return apply_arith(e.op(), real(e.args()[0]), real(e.args()[1]), e);
      case Op::Call: {
        double a = real(e.args()[0]);
        double b = e.args().size() > 1 ? real(e.args()[1]) : 0.0;
        return apply_function(e.function(), a, b, e);
      }
      default: throw EvalError("boolean used where a number is required", print(e));
    }
  }

  bool truth(const Expression& e) const {
    switch (e.op()) {
      case Op::Not: return !truth(e.args()[0]);
      case Op::And: return truth(e.args()[0]) && truth(e.args()[1]);
      case Op::Or: return truth(e.args()[0]) || truth(e.args()[1]);
      default:
        if (is_comparison(e.op()))
          return apply_compare(e.op(), real(e.args()[0]), real(e.args()[1]));
        throw EvalError("number used where a boolean is required", print(e));
    }
  }
};

void collect_variables(const Expression& e, std::set<std::string>& out) {
  if (e.op() == Op::Variable) out.insert(e.name());
  for (const auto& a : e.args()) collect_variables(a, out);
}

bool commutative(const Expression& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Mul:
    case Op::Equal:
    case Op::NotEqual:
    case Op::And:
    case Op::Or: return true;
    case Op::Call:
      return e.function() == Function::Min || e.function() == Function::Max ||
             e.function() == Function::CircDist;
    default: return false;
  }
}

Expression rebuild(const Expression& e, std::vector<Expression> args) {
  switch (e.op()) {
    case Op::Literal:
    case Op::Variable: return e;
    case Op::Neg:
    case Op::Not: return Expression::unary(e.op(), std::move(args[0]));
    case Op::Call: return Expression::call(e.function(), std::move(args));
    default: return Expression::binary(e.op(), std::move(args[0]), std::move(args[1]));
  }
}

}  // namespace

// ---------------------------------------------------------------- public API

std::string_view function_name(Function f) {
  for (const auto& info : kFunctions)
    if (info.f == f) return info.name;
  return "?";
}

std::optional<Function> function_by_name(std::string_view name) {
  for (const auto& info : kFunctions)
    if (info.name == name) return info.f;
  return std::nullopt;
}

int function_arity(Function f) {
  for (const auto& info : kFunctions)
    if (info.f == f) return info.arity;
  return 0;
}

Expression::Expression() : Expression(literal(0.0)) {}

Expression Expression::literal(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Literal;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Variable;
  n->name = std::move(name);
  return Expression(std::move(n));
}

Expression Expression::unary(Op op, Expression operand) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args.push_back(std::move(operand));
  return Expression(std::move(n));
}

Expression Expression::binary(Op op, Expression lhs, Expression rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  return Expression(std::move(n));
}

Expression Expression::call(Function f, std::vector<Expression> args) {
  auto n = std::make_shared<Node>();
  n->op = Op::Call;
  n->function = f;
  n->args = std::move(args);
  return Expression(std::move(n));
}

Op Expression::op() const { return node_->op; }
double Expression::value() const { return node_->value; }
const std::string& Expression::name() const { return node_->name; }
Function Expression::function() const { return node_->function; }
std::span<const Expression> Expression::args() const { return node_->args; }

bool Expression::is_predicate() const { return is_comparison(op()) || is_connective(op()); }

bool operator==(const Expression& a, const Expression& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Literal:
      return std::memcmp(&a.node_->value, &b.node_->value, sizeof(double)) == 0;
    case Op::Variable: return a.name() == b.name();
    case Op::Call:
      if (a.function() != b.function()) return false;
      break;
    default: break;
  }
  if (a.args().size() != b.args().size()) return false;
  for (std::size_t i = 0; i < a.args().size(); ++i)
    if (!(a.args()[i] == b.args()[i])) return false;
  return true;
}

Expression parse(std::string_view src) { return Parser(src).parse_all(); }

std::string print(const Expression& e) {
  std::string out;
  print_into(e, out);
  return out;
}

std::set<std::string> free_variables(const Expression& e) {
  std::set<std::string> out;
  collect_variables(e, out);
  return out;
}

Value evaluate(const Expression& e, const Lookup& lookup) {
  TreeEvaluator ev{lookup};
  if (e.is_predicate()) return ev.truth(e);
  return ev.real(e);
}

Value evaluate(const Expression& e, const std::map<std::string, double>& env) {
  Lookup lookup = [&env](const std::string& name) -> std::optional<double> {
    auto it = env.find(name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  return evaluate(e, lookup);
}

double evaluate_real(const Expression& e, const std::map<std::string, double>& env) {
  Value v = evaluate(e, env);
  if (!std::holds_alternative<double>(v))
    throw EvalError("expected a number", print(e));
  return std::get<double>(v);
}

bool evaluate_bool(const Expression& e, const std::map<std::string, double>& env) {
  Value v = evaluate(e, env);
  if (!std::holds_alternative<bool>(v))
    throw EvalError("expected a boolean", print(e));
  return std::get<bool>(v);
}

void check_type(const Expression& e, bool want_predicate) {
  if (e.is_predicate() != want_predicate) {
    throw ConfigError("'" + print(e) + "' is " +
                      (want_predicate ? "numeric where a predicate" : "a predicate where a number") +
                      " is required");
  }
  switch (e.op()) {
    case Op::Not:
    case Op::And:
    case Op::Or:
      for (const auto& a : e.args()) check_type(a, true);
      return;
    default:
      for (const auto& a : e.args()) check_type(a, false);
      return;
  }
}

Expression normalize(const Expression& e) {
  std::vector<Expression> args;
  args.reserve(e.args().size());
  for (const auto& a : e.args()) args.push_back(normalize(a));

  bool all_literal = !args.empty() && std::all_of(args.begin(), args.end(), [](const Expression& a) {
    return a.op() == Op::Literal;
  });
  if (all_literal && !e.is_predicate()) {
    try {
      Expression candidate = rebuild(e, args);
      TreeEvaluator ev{Lookup([](const std::string&) { return std::optional<double>(); })};
      double v = ev.real(candidate);
      if (std::isfinite(v)) return Expression::literal(v);
    } catch (const EvalError&) {
      // leave unfolded
    }
  }
  if (commutative(e) && args.size() == 2 && print(args[1]) < print(args[0])) {
    std::swap(args[0], args[1]);
  }
  return rebuild(e, std::move(args));
}

Expression rename_variables(const Expression& e, const std::map<std::string, std::string>& renames) {
  if (e.op() == Op::Variable) {
    auto it = renames.find(e.name());
    return it == renames.end() ? e : Expression::variable(it->second);
  }
  if (e.args().empty()) return e;
  std::vector<Expression> args;
  for (const auto& a : e.args()) args.push_back(rename_variables(a, renames));
  return rebuild(e, std::move(args));
}

// ---------------------------------------------------------------- symbols / compiled

void SymbolTable::define(const std::string& name, int slot) {
  if (!slots_.emplace(name, slot).second) throw ConfigError("duplicate symbol '" + name + "'");
}

std::optional<int> SymbolTable::find(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) return std::nullopt;
  return it->second;
}

CompiledExpr::CompiledExpr(const Expression& e, const SymbolTable& symbols) : source_(e) {
  root_ = lower(e, symbols);
}

int CompiledExpr::lower(const Expression& e, const SymbolTable& symbols) {
  Instr ins;
  ins.op = e.op();
  ins.function = e.op() == Op::Call ? e.function() : Function::Sin;
  ins.source = e;
  if (e.op() == Op::Literal) ins.value = e.value();
  if (e.op() == Op::Variable) {
    auto slot = symbols.find(e.name());
    if (!slot) throw ConfigError("unknown symbol '" + e.name() + "'");
    ins.slot = *slot;
  }
  if (!e.args().empty()) ins.lhs = lower(e.args()[0], symbols);
  if (e.args().size() > 1) ins.rhs = lower(e.args()[1], symbols);
  code_.push_back(std::move(ins));
  return static_cast<int>(code_.size()) - 1;
}

bool CompiledExpr::is_zero_literal() const {
  return root_ >= 0 && code_[root_].op == Op::Literal && code_[root_].value == 0.0;
}

double CompiledExpr::eval_real(int at, std::span<const double> env) const {
  const Instr& ins = code_[at];
  switch (ins.op) {
    case Op::Literal: return ins.value;
    case Op::Variable: return env[ins.slot];
    case Op::Neg: return -eval_real(ins.lhs, env);
    case Op::Add: return eval_real(ins.lhs, env) + eval_real(ins.rhs, env);
    case Op::Sub: return eval_real(ins.lhs, env) - eval_real(ins.rhs, env);
    case Op::Mul: return eval_real(ins.lhs, env) * eval_real(ins.rhs, env);
    case Op::Div: {
      double a = eval_real(ins.lhs, env);
      double b = eval_real(ins.rhs, env);
      return apply_arith(Op::Div, a, b, ins.source);
    }
    case Op::Call: {
      double a = eval_real(ins.lhs, env);
      double b = ins.rhs >= 0 ? eval_real(ins.rhs, env) : 0.0;
      return apply_function(ins.function, a, b, ins.source);
    }
    default: throw EvalError("boolean used where a number is required", print(ins.source));
  }
}

bool CompiledExpr::eval_bool(int at, std::span<const double> env) const {
  const Instr& ins = code_[at];
  switch (ins.op) {
    case Op::Not: return !eval_bool(ins.lhs, env);
    case Op::And: return eval_bool(ins.lhs, env) && eval_bool(ins.rhs, env);
    case Op::Or: return eval_bool(ins.lhs, env) || eval_bool(ins.rhs, env);
    default:
      if (is_comparison(ins.op))
        return apply_compare(ins.op, eval_real(ins.lhs, env), eval_real(ins.rhs, env));
      throw EvalError("number used where a boolean is required", print(ins.source));
  }
}

double CompiledExpr::real(std::span<const double> env) const { return eval_real(root_, env); }

bool CompiledExpr::truth(std::span<const double> env) const { return eval_bool(root_, env); }

}  // namespace asyncnet
