#pragma once

// Expression language for vector-field components, guard predicates and
// level functions.
//
// Grammar (lowest to highest precedence):
//
//   expr    := and ( ("or" | "||") and )*
//   and     := not ( ("and" | "&&") not )*
//   not     := ("not" | "!") not | cmp
//   cmp     := sum [ ("<" | "<=" | ">" | ">=" | "==" | "=" | "!=") sum ]
//   sum     := product ( ("+" | "-") product )*
//   product := unary ( ("*" | "/") unary )*
//   unary   := "-" NUMBER | "-" unary | primary
//   primary := NUMBER | NAME | NAME "(" expr ("," expr)* ")"
//            | "x" "[" INT "]" "[" INT "]" | "(" expr ")"
//
// A minus sign written directly in front of a number literal produces a
// negative literal; "-(2)" produces a negation node.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace asyncnet {

enum class Op {
  Literal,
  Variable,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Call,
  Less,
  LessEq,
  Greater,
  GreaterEq,
  Equal,
  NotEqual,
  Not,
  And,
  Or,
};

enum class Function { Sin, Cos, Tan, Exp, Log, Abs, Min, Max, Mod2Pi, CircDist };

std::string_view function_name(Function f);
std::optional<Function> function_by_name(std::string_view name);
int function_arity(Function f);

/// Immutable expression tree with value semantics. Copies share nodes.
class Expression {
 public:
  struct Node;

  Expression();  // literal 0

  static Expression literal(double value);
  static Expression variable(std::string name);
  static Expression unary(Op op, Expression operand);
  static Expression binary(Op op, Expression lhs, Expression rhs);
  static Expression call(Function f, std::vector<Expression> args);

  Op op() const;
  double value() const;
  const std::string& name() const;
  Function function() const;
  std::span<const Expression> args() const;

  /// True when the expression denotes a boolean (comparison or connective).
  bool is_predicate() const;

  /// Structural equality; literals compare bitwise.
  friend bool operator==(const Expression& a, const Expression& b);

  const Node* node() const { return node_.get(); }

 private:
  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Expression::Node {
  Op op = Op::Literal;
  double value = 0.0;
  std::string name;
  Function function = Function::Sin;
  std::vector<Expression> args;
};

Expression parse(std::string_view src);
std::string print(const Expression& e);
std::set<std::string> free_variables(const Expression& e);

using Value = std::variant<double, bool>;
using Lookup = std::function<std::optional<double>(const std::string&)>;

Value evaluate(const Expression& e, const std::map<std::string, double>& env);
Value evaluate(const Expression& e, const Lookup& lookup);
double evaluate_real(const Expression& e, const std::map<std::string, double>& env);
bool evaluate_bool(const Expression& e, const std::map<std::string, double>& env);

/// Throws ConfigError unless `e` is boolean (want_predicate) or real valued.
void check_type(const Expression& e, bool want_predicate);

/// Constant folding plus canonical operand order for commutative operators.
Expression normalize(const Expression& e);

Expression rename_variables(const Expression& e,
                            const std::map<std::string, std::string>& renames);

/// Name -> slot map used to compile expressions against a flat environment.
class SymbolTable {
 public:
  void define(const std::string& name, int slot);
  std::optional<int> find(const std::string& name) const;
  bool contains(const std::string& name) const { return slots_.count(name) != 0; }
  const std::map<std::string, int>& entries() const { return slots_; }

 private:
  std::map<std::string, int> slots_;
};

/// Expression lowered to slot references; evaluation reads `env[slot]`.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expression& e, const SymbolTable& symbols);

  double real(std::span<const double> env) const;
  bool truth(std::span<const double> env) const;

  bool empty() const { return code_.empty(); }
  /// True for the literal 0 (used to keep frozen coordinates bit-identical).
  bool is_zero_literal() const;
  const Expression& source() const { return source_; }

 private:
  struct Instr {
    Op op = Op::Literal;
    Function function = Function::Sin;
    int lhs = -1;
    int rhs = -1;
    double value = 0.0;
    int slot = -1;
    Expression source;
  };

  int lower(const Expression& e, const SymbolTable& symbols);
  double eval_real(int at, std::span<const double> env) const;
  bool eval_bool(int at, std::span<const double> env) const;

  std::vector<Instr> code_;
  int root_ = -1;
  Expression source_;
};

}  // namespace asyncnet
