#pragma once

// Rate-expression language. Grammar (recursive descent, no implicit
// multiplication, no function calls):
//
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' factor)?          right-associative
//   atom   := number | identifier | '(' expr ')'
//
// so '^' binds tighter than unary minus, which binds tighter than '*' and
// '/'. Identifiers are state coordinates x1..xk or declared parameters;
// anything else is rejected at parse time.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfcert/errors.hpp"

namespace mfcert::expr {

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node {
  enum class Kind { Constant, Variable, Negate, Binary };

  Kind kind = Kind::Constant;
  double value = 0.0;           // Constant
  std::string name;             // Variable
  BinaryOp op = BinaryOp::Add;  // Binary
  std::unique_ptr<Node> lhs;    // Binary left operand; Negate operand
  std::unique_ptr<Node> rhs;    // Binary right operand
};

/// Immutable expression tree; move-only, clone() for explicit copies.
class ExprAst {
 public:
  ExprAst() = default;
  explicit ExprAst(std::unique_ptr<Node> root) : root_(std::move(root)) {}

  bool empty() const { return root_ == nullptr; }
  const Node& root() const { return *root_; }
  ExprAst clone() const;

 private:
  std::unique_ptr<Node> root_;
};

/// State coordinates x1..xk plus named parameter constants. The two name
/// sets are disjoint by construction.
class SymbolTable {
 public:
  SymbolTable(int dimension, std::map<std::string, double> params);

  int dimension() const { return dimension_; }
  const std::map<std::string, double>& params() const { return params_; }

  /// 0-based coordinate index for x1..xk, or -1.
  int state_index(std::string_view name) const;
  bool is_param(std::string_view name) const;
  bool is_declared(std::string_view name) const;

 private:
  int dimension_;
  std::map<std::string, double> params_;
};

using Bindings = std::map<std::string, double>;

ExprAst parse_expression(std::string_view source, const SymbolTable& symbols);

/// Tree-walk evaluation; children evaluate left to right in double precision.
double evaluate(const ExprAst& ast, const Bindings& bindings);

std::set<std::string> free_variables(const ExprAst& ast);

/// Minimal-parenthesis rendering; reparsing yields a structurally
/// identical tree for any parser-produced AST.
std::string to_string(const ExprAst& ast);

bool structurally_equal(const ExprAst& a, const ExprAst& b);

/// Shared power semantics: integer exponents are computed exactly by binary
/// exponentiation; a non-integer power of a negative base is a DomainError;
/// 0 raised to a negative power is a DivisionByZero.
double eval_pow(double base, double exponent);

/// Postfix program for the simulation hot loop. Parameters are inlined as
/// constants at compile time; coordinates become slot reads. Instruction
/// order equals a left-to-right post-order walk of the tree, so eval()
/// reproduces evaluate() bit for bit.
class CompiledExpr {
 public:
  enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Pow, Neg };

  struct Instr {
    Op op;
    std::int32_t slot = 0;
    double value = 0.0;
  };

  double eval(std::span<const double> state) const;

 private:
  friend CompiledExpr compile(const ExprAst& ast, const SymbolTable& symbols);

  std::vector<Instr> code_;
};

CompiledExpr compile(const ExprAst& ast, const SymbolTable& symbols);

}  // namespace mfcert::expr
