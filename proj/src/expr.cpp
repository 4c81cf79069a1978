#include "mfcert/expr.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace mfcert::expr {

namespace {

std::unique_ptr<Node> clone_node(const Node& n) {
  auto out = std::make_unique<Node>();
  out->kind = n.kind;
  out->value = n.value;
  out->name = n.name;
  out->op = n.op;
  if (n.lhs) out->lhs = clone_node(*n.lhs);
  if (n.rhs) out->rhs = clone_node(*n.rhs);
  return out;
}

}  // namespace

ExprAst ExprAst::clone() const {
  return root_ ? ExprAst(clone_node(*root_)) : ExprAst();
}

SymbolTable::SymbolTable(int dimension, std::map<std::string, double> params)
    : dimension_(dimension), params_(std::move(params)) {
  if (dimension_ < 1) throw SchemaError("state dimension must be >= 1");
  for (const auto& [name, value] : params_) {
    if (name.empty() || (!std::isalpha(static_cast<unsigned char>(name[0])) &&
                         name[0] != '_'))
      throw SchemaError("invalid parameter name '" + name + "'");
    for (char c : name)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
        throw SchemaError("invalid parameter name '" + name + "'");
    if (state_index(name) >= 0)
      throw SchemaError("parameter '" + name + "' collides with a state coordinate");
    if (!std::isfinite(value))
      throw SchemaError("parameter '" + name + "' must be finite");
  }
}

int SymbolTable::state_index(std::string_view name) const {
  if (name.size() < 2 || name[0] != 'x') return -1;
  if (name[1] == '0') return -1;  // no leading zeros, no x0
  long idx = 0;
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return -1;
    idx = idx * 10 + (name[i] - '0');
    if (idx > dimension_) return -1;
  }
  return idx >= 1 && idx <= dimension_ ? static_cast<int>(idx) - 1 : -1;
}

bool SymbolTable::is_param(std::string_view name) const {
  return params_.find(std::string(name)) != params_.end();
}

bool SymbolTable::is_declared(std::string_view name) const {
  return state_index(name) >= 0 || is_param(name);
}

namespace {

struct Token {
  enum class Kind {
    Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End
  };
  Kind kind;
  double value = 0.0;
  std::string text;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= src_.size()) return {Token::Kind::End, 0.0, "", start};

    const char c = src_[pos_];
    switch (c) {
      case '+': ++pos_; return {Token::Kind::Plus, 0.0, "+", start};
      case '-': ++pos_; return {Token::Kind::Minus, 0.0, "-", start};
      case '*': ++pos_; return {Token::Kind::Star, 0.0, "*", start};
      case '/': ++pos_; return {Token::Kind::Slash, 0.0, "/", start};
      case '^': ++pos_; return {Token::Kind::Caret, 0.0, "^", start};
      case '(': ++pos_; return {Token::Kind::LParen, 0.0, "(", start};
      case ')': ++pos_; return {Token::Kind::RParen, 0.0, ")", start};
      default: break;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))))
      return lex_number(start);

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      return {Token::Kind::Ident, 0.0,
              std::string(src_.substr(start, pos_ - start)), start};
    }

    throw SyntaxError(start, std::string("unexpected character '") + c + "'");
  }

 private:
  Token lex_number(std::size_t start) {
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t exp_pos = pos_ + 1;
      if (exp_pos < src_.size() && (src_[exp_pos] == '+' || src_[exp_pos] == '-'))
        ++exp_pos;
      if (exp_pos >= src_.size() ||
          !std::isdigit(static_cast<unsigned char>(src_[exp_pos])))
        throw SyntaxError(pos_, "malformed exponent in numeric literal");
      pos_ = exp_pos;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
    }
    double value = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
      throw SyntaxError(start, "malformed numeric literal");
    return {Token::Kind::Number, value,
            std::string(src_.substr(start, pos_ - start)), start};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view src, const SymbolTable& symbols)
      : lexer_(src), symbols_(symbols) {
    advance();
  }

  ExprAst parse() {
    auto root = parse_expr();
    if (tok_.kind != Token::Kind::End)
      throw SyntaxError(tok_.offset, "unexpected token '" + tok_.text + "'");
    return ExprAst(std::move(root));
  }

 private:
  void advance() { tok_ = lexer_.next(); }

  bool accept(Token::Kind kind) {
    if (tok_.kind != kind) return false;
    advance();
    return true;
  }

  std::unique_ptr<Node> parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      BinaryOp op;
      if (tok_.kind == Token::Kind::Plus) op = BinaryOp::Add;
      else if (tok_.kind == Token::Kind::Minus) op = BinaryOp::Sub;
      else break;
      advance();
      lhs = make_binary(op, std::move(lhs), parse_term());
    }
    return lhs;
  }

  std::unique_ptr<Node> parse_term() {
    auto lhs = parse_factor();
    for (;;) {
      BinaryOp op;
      if (tok_.kind == Token::Kind::Star) op = BinaryOp::Mul;
      else if (tok_.kind == Token::Kind::Slash) op = BinaryOp::Div;
      else break;
      advance();
      lhs = make_binary(op, std::move(lhs), parse_factor());
    }
    return lhs;
  }

  std::unique_ptr<Node> parse_factor() {
    if (accept(Token::Kind::Minus)) {
      auto node = std::make_unique<Node>();
      node->kind = Node::Kind::Negate;
      node->lhs = parse_factor();
      return node;
    }
    return parse_power();
  }

  std::unique_ptr<Node> parse_power() {
    auto base = parse_atom();
    if (accept(Token::Kind::Caret))
      return make_binary(BinaryOp::Pow, std::move(base), parse_factor());
    return base;
  }

  std::unique_ptr<Node> parse_atom() {
    if (tok_.kind == Token::Kind::Number) {
      auto node = std::make_unique<Node>();
      node->kind = Node::Kind::Constant;
      node->value = tok_.value;
      advance();
      return node;
    }
    if (tok_.kind == Token::Kind::Ident) {
      if (!symbols_.is_declared(tok_.text)) throw UnknownIdentifier(tok_.text);
      auto node = std::make_unique<Node>();
      node->kind = Node::Kind::Variable;
      node->name = tok_.text;
      advance();
      return node;
    }
    if (tok_.kind == Token::Kind::LParen) {
      advance();
      auto inner = parse_expr();
      if (!accept(Token::Kind::RParen))
        throw SyntaxError(tok_.offset, "expected ')'");
      return inner;
    }
    if (tok_.kind == Token::Kind::End)
      throw SyntaxError(tok_.offset, "unexpected end of expression");
    throw SyntaxError(tok_.offset, "unexpected token '" + tok_.text + "'");
  }

  static std::unique_ptr<Node> make_binary(BinaryOp op,
                                           std::unique_ptr<Node> lhs,
                                           std::unique_ptr<Node> rhs) {
    auto node = std::make_unique<Node>();
    node->kind = Node::Kind::Binary;
    node->op = op;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
  }

  Lexer lexer_;
  const SymbolTable& symbols_;
  Token tok_;
};

}  // namespace

ExprAst parse_expression(std::string_view source, const SymbolTable& symbols) {
  return Parser(source, symbols).parse();
}

double eval_pow(double base, double exponent) {
  if (std::floor(exponent) == exponent && std::abs(exponent) <= 1024.0) {
    long long e = static_cast<long long>(exponent);
    if (e == 0) return 1.0;
    unsigned long long m = e < 0 ? static_cast<unsigned long long>(-e)
                                 : static_cast<unsigned long long>(e);
    double acc = 1.0;
    double b = base;
    while (m != 0) {
      if (m & 1ULL) acc *= b;
      m >>= 1;
      if (m != 0) b *= b;
    }
    if (e < 0) {
      if (acc == 0.0) throw DivisionByZero();
      return 1.0 / acc;
    }
    return acc;
  }
  if (base < 0.0)
    throw DomainError("non-integer power of a negative base");
  if (base == 0.0) {
    if (exponent < 0.0) throw DivisionByZero();
    return 0.0;
  }
  return std::pow(base, exponent);
}

namespace {

double eval_node(const Node& n, const Bindings& bindings) {
  switch (n.kind) {
    case Node::Kind::Constant:
      return n.value;
    case Node::Kind::Variable: {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) throw UnknownIdentifier(n.name);
      return it->second;
    }
    case Node::Kind::Negate:
      return -eval_node(*n.lhs, bindings);
    case Node::Kind::Binary: {
      const double l = eval_node(*n.lhs, bindings);
      const double r = eval_node(*n.rhs, bindings);
      switch (n.op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div:
          if (r == 0.0) throw DivisionByZero();
          return l / r;
        case BinaryOp::Pow: return eval_pow(l, r);
      }
      break;
    }
  }
  throw Error(ErrorCategory::runtime, "corrupt expression node");
}

void collect_vars(const Node& n, std::set<std::string>& out) {
  switch (n.kind) {
    case Node::Kind::Constant: return;
    case Node::Kind::Variable: out.insert(n.name); return;
    case Node::Kind::Negate: collect_vars(*n.lhs, out); return;
    case Node::Kind::Binary:
      collect_vars(*n.lhs, out);
      collect_vars(*n.rhs, out);
      return;
  }
}

int precedence(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Constant:
    case Node::Kind::Variable: return 5;
    case Node::Kind::Negate: return 3;
    case Node::Kind::Binary:
      switch (n.op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
  }
  return 5;
}

char op_char(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
    case BinaryOp::Pow: return '^';
  }
  return '?';
}

void print_node(const Node& n, std::string& out) {
  const auto wrapped = [&out](const Node& child, bool parens) {
    if (parens) out += '(';
    print_node(child, out);
    if (parens) out += ')';
  };

  switch (n.kind) {
    case Node::Kind::Constant: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case Node::Kind::Variable:
      out += n.name;
      return;
    case Node::Kind::Negate:
      out += '-';
      wrapped(*n.lhs, precedence(*n.lhs) < 3);
      return;
    case Node::Kind::Binary: {
      const int p = precedence(n);
      const bool pow = n.op == BinaryOp::Pow;
      // '^' is right-associative, everything else associates left; the
      // exponent side of '^' admits unary minus and nested powers bare.
      wrapped(*n.lhs, pow ? precedence(*n.lhs) <= p : precedence(*n.lhs) < p);
      out += op_char(n.op);
      wrapped(*n.rhs, pow ? precedence(*n.rhs) <= 2 : precedence(*n.rhs) <= p);
      return;
    }
  }
}

bool equal_nodes(const Node* a, const Node* b) {
  if (a == nullptr || b == nullptr) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Node::Kind::Constant:
      return std::bit_cast<std::uint64_t>(a->value) ==
             std::bit_cast<std::uint64_t>(b->value);
    case Node::Kind::Variable:
      return a->name == b->name;
    case Node::Kind::Negate:
      return equal_nodes(a->lhs.get(), b->lhs.get());
    case Node::Kind::Binary:
      return a->op == b->op && equal_nodes(a->lhs.get(), b->lhs.get()) &&
             equal_nodes(a->rhs.get(), b->rhs.get());
  }
  return false;
}

}  // namespace

double evaluate(const ExprAst& ast, const Bindings& bindings) {
  if (ast.empty()) throw Error(ErrorCategory::runtime, "empty expression");
  return eval_node(ast.root(), bindings);
}

std::set<std::string> free_variables(const ExprAst& ast) {
  std::set<std::string> out;
  if (!ast.empty()) collect_vars(ast.root(), out);
  return out;
}

std::string to_string(const ExprAst& ast) {
  std::string out;
  if (!ast.empty()) print_node(ast.root(), out);
  return out;
}

bool structurally_equal(const ExprAst& a, const ExprAst& b) {
  return equal_nodes(a.empty() ? nullptr : &a.root(),
                     b.empty() ? nullptr : &b.root());
}

namespace {

constexpr int kMaxStack = 64;

void emit(const Node& n, const SymbolTable& symbols,
          std::vector<CompiledExpr::Instr>& code);

}  // namespace

double CompiledExpr::eval(std::span<const double> state) const {
  double stack[kMaxStack];
  int top = 0;
  for (const Instr& ins : code_) {
    switch (ins.op) {
      case Op::Const: stack[top++] = ins.value; break;
      case Op::Var: stack[top++] = state[static_cast<std::size_t>(ins.slot)]; break;
      case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::Add: --top; stack[top - 1] += stack[top]; break;
      case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
      case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
      case Op::Div:
        --top;
        if (stack[top] == 0.0) throw DivisionByZero();
        stack[top - 1] /= stack[top];
        break;
      case Op::Pow:
        --top;
        stack[top - 1] = eval_pow(stack[top - 1], stack[top]);
        break;
    }
  }
  return stack[0];
}

namespace {

void emit(const Node& n, const SymbolTable& symbols,
          std::vector<CompiledExpr::Instr>& code) {
  using Op = CompiledExpr::Op;
  using Instr = CompiledExpr::Instr;
  switch (n.kind) {
    case Node::Kind::Constant:
      code.push_back(Instr{Op::Const, 0, n.value});
      return;
    case Node::Kind::Variable: {
      const int idx = symbols.state_index(n.name);
      if (idx >= 0) {
        code.push_back(Instr{Op::Var, idx, 0.0});
      } else {
        auto it = symbols.params().find(n.name);
        if (it == symbols.params().end()) throw UnknownIdentifier(n.name);
        code.push_back(Instr{Op::Const, 0, it->second});
      }
      return;
    }
    case Node::Kind::Negate:
      emit(*n.lhs, symbols, code);
      code.push_back(Instr{Op::Neg, 0, 0.0});
      return;
    case Node::Kind::Binary: {
      emit(*n.lhs, symbols, code);
      emit(*n.rhs, symbols, code);
      Op op = Op::Add;
      switch (n.op) {
        case BinaryOp::Add: op = Op::Add; break;
        case BinaryOp::Sub: op = Op::Sub; break;
        case BinaryOp::Mul: op = Op::Mul; break;
        case BinaryOp::Div: op = Op::Div; break;
        case BinaryOp::Pow: op = Op::Pow; break;
      }
      code.push_back(Instr{op, 0, 0.0});
      return;
    }
  }
}

int stack_need(const std::vector<CompiledExpr::Instr>& code) {
  using Op = CompiledExpr::Op;
  int depth = 0, peak = 0;
  for (const auto& ins : code) {
    if (ins.op == Op::Const || ins.op == Op::Var) ++depth;
    else if (ins.op != Op::Neg) --depth;
    peak = std::max(peak, depth);
  }
  return peak;
}

}  // namespace

CompiledExpr compile(const ExprAst& ast, const SymbolTable& symbols) {
  if (ast.empty()) throw Error(ErrorCategory::runtime, "empty expression");
  CompiledExpr out;
  emit(ast.root(), symbols, out.code_);
  if (stack_need(out.code_) > kMaxStack)
    throw SchemaError("expression too deeply nested");
  return out;
}

}  // namespace mfcert::expr
