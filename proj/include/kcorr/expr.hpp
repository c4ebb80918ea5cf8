#pragma once
// Tiny closed expression grammar for potentials in config files:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary ('^' number)?
//   unary  := '-' unary | primary
//   primary:= number | variable | '(' expr ')' | func '(' expr ')'
// variables x|y|z (aliases x1|x2|x3); functions exp, log, sqrt, sin, cos,
// tanh. Expressions evaluate on Points and differentiate symbolically, so
// config-declared potentials get exact gradients.

#include <cctype>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "kcorr/numerics.hpp"

namespace kcorr {

class ExprError : public std::runtime_error {
 public:
  explicit ExprError(const std::string& what) : std::runtime_error(what) {}
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
 public:
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Func };
  enum class Fn { Exp, Log, Sqrt, Sin, Cos, Tanh };

  Kind kind = Kind::Const;
  double value = 0.0;   // Const: the constant; Pow: the exponent
  int var_index = 0;    // Var
  Fn fn = Fn::Exp;      // Func
  ExprPtr lhs, rhs;     // children (Func/Pow use lhs)

  static ExprPtr constant(double c) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Const;
    e->value = c;
    return e;
  }
  static ExprPtr variable(int i) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    e->var_index = i;
    return e;
  }
  static ExprPtr binary(Kind k, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
  }
  static ExprPtr power(ExprPtr base, double expo) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Pow;
    e->lhs = std::move(base);
    e->value = expo;
    return e;
  }
  static ExprPtr call(Fn f, ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Func;
    e->fn = f;
    e->lhs = std::move(a);
    return e;
  }

  double eval(const Point& x) const {
    switch (kind) {
      case Kind::Const: return value;
      case Kind::Var:
        if (var_index >= static_cast<int>(x.size()))
          throw ExprError("expression uses variable beyond the point dimension");
        return x[static_cast<std::size_t>(var_index)];
      case Kind::Add: return lhs->eval(x) + rhs->eval(x);
      case Kind::Sub: return lhs->eval(x) - rhs->eval(x);
      case Kind::Mul: return lhs->eval(x) * rhs->eval(x);
      case Kind::Div: return lhs->eval(x) / rhs->eval(x);
      case Kind::Pow: return pow_fast(lhs->eval(x), value);
      case Kind::Func: {
        const double a = lhs->eval(x);
        switch (fn) {
          case Fn::Exp: return std::exp(a);
          case Fn::Log: return std::log(a);
          case Fn::Sqrt: return std::sqrt(a);
          case Fn::Sin: return std::sin(a);
          case Fn::Cos: return std::cos(a);
          default: return std::tanh(a);
        }
      }
    }
    return 0.0;
  }

  ExprPtr derivative(int i) const {
    switch (kind) {
      case Kind::Const: return constant(0.0);
      case Kind::Var: return constant(var_index == i ? 1.0 : 0.0);
      case Kind::Add: return binary(Kind::Add, lhs->derivative(i), rhs->derivative(i));
      case Kind::Sub: return binary(Kind::Sub, lhs->derivative(i), rhs->derivative(i));
      case Kind::Mul:
        return binary(Kind::Add, binary(Kind::Mul, lhs->derivative(i), rhs),
                      binary(Kind::Mul, lhs, rhs->derivative(i)));
      case Kind::Div:
        // (u/v)' = u'/v - u v'/v^2
        return binary(Kind::Sub, binary(Kind::Div, lhs->derivative(i), rhs),
                      binary(Kind::Div, binary(Kind::Mul, lhs, rhs->derivative(i)),
                             power(rhs, 2.0)));
      case Kind::Pow: {
        // (u^a)' = a u^(a-1) u'
        auto chain = binary(Kind::Mul, constant(value), power(lhs, value - 1.0));
        return binary(Kind::Mul, chain, lhs->derivative(i));
      }
      case Kind::Func: {
        ExprPtr outer;
        switch (fn) {
          case Fn::Exp: outer = call(Fn::Exp, lhs); break;
          case Fn::Log: outer = binary(Kind::Div, constant(1.0), lhs); break;
          case Fn::Sqrt:
            outer = binary(Kind::Div, constant(0.5), call(Fn::Sqrt, lhs));
            break;
          case Fn::Sin: outer = call(Fn::Cos, lhs); break;
          case Fn::Cos:
            outer = binary(Kind::Sub, constant(0.0), call(Fn::Sin, lhs));
            break;
          default:  // tanh' = 1 - tanh^2
            outer = binary(Kind::Sub, constant(1.0), power(call(Fn::Tanh, lhs), 2.0));
        }
        return binary(Kind::Mul, outer, lhs->derivative(i));
      }
    }
    return constant(0.0);
  }
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string text) : text_(std::move(text)) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ExprError("unexpected trailing characters at position " +
                      std::to_string(pos_) + " in '" + text_ + "'");
    return e;
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprPtr expr() {
    ExprPtr e = term();
    while (true) {
      if (consume('+'))
        e = Expr::binary(Expr::Kind::Add, e, term());
      else if (consume('-'))
        e = Expr::binary(Expr::Kind::Sub, e, term());
      else
        return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = factor();
    while (true) {
      if (consume('*'))
        e = Expr::binary(Expr::Kind::Mul, e, factor());
      else if (consume('/'))
        e = Expr::binary(Expr::Kind::Div, e, factor());
      else
        return e;
    }
  }

  // unary minus binds looser than '^': -x^2 parses as -(x^2)
  ExprPtr factor() {
    if (consume('-'))
      return Expr::binary(Expr::Kind::Sub, Expr::constant(0.0), factor());
    ExprPtr base = primary();
    if (consume('^')) {
      skip_ws();
      const bool neg = consume('-');
      const double expo = number();
      return Expr::power(base, neg ? -expo : expo);
    }
    return base;
  }

  double number() {
    skip_ws();
    std::size_t end = pos_;
    while (end < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.' ||
            text_[end] == 'e' || text_[end] == 'E' ||
            ((text_[end] == '+' || text_[end] == '-') && end > pos_ &&
             (text_[end - 1] == 'e' || text_[end - 1] == 'E'))))
      ++end;
    if (end == pos_) throw ExprError("expected a number at position " + std::to_string(pos_));
    const double v = std::stod(text_.substr(pos_, end - pos_));
    pos_ = end;
    return v;
  }

  ExprPtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ExprError("unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return Expr::constant(number());
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      if (!consume(')')) throw ExprError("missing closing parenthesis");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
        ++end;
      const std::string name = text_.substr(pos_, end - pos_);
      pos_ = end;
      if (name == "x" || name == "x1") return Expr::variable(0);
      if (name == "y" || name == "x2") return Expr::variable(1);
      if (name == "z" || name == "x3") return Expr::variable(2);
      Expr::Fn fn;
      if (name == "exp") fn = Expr::Fn::Exp;
      else if (name == "log") fn = Expr::Fn::Log;
      else if (name == "sqrt") fn = Expr::Fn::Sqrt;
      else if (name == "sin") fn = Expr::Fn::Sin;
      else if (name == "cos") fn = Expr::Fn::Cos;
      else if (name == "tanh") fn = Expr::Fn::Tanh;
      else throw ExprError("unknown identifier '" + name + "'");
      if (!consume('(')) throw ExprError("expected '(' after function " + name);
      ExprPtr arg = expr();
      if (!consume(')')) throw ExprError("missing ')' after function argument");
      return Expr::call(fn, arg);
    }
    throw ExprError(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace detail

inline ExprPtr parse_expression(const std::string& text) {
  return detail::ExprParser(text).parse();
}

// Bundles an expression with its gradient as plain callbacks.
struct ExpressionField {
  ExprPtr expression;
  std::vector<ExprPtr> gradient;

  ScalarField as_field() const {
    auto e = expression;
    return [e](const Point& x) { return e->eval(x); };
  }
  std::function<Point(const Point&)> as_gradient() const {
    auto g = gradient;
    return [g](const Point& x) {
      Point out(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i]->eval(x);
      return out;
    };
  }
  std::function<double(double)> as_field_1d() const {
    auto e = expression;
    return [e](double x) { return e->eval(Point{x}); };
  }
};

inline ExpressionField make_expression_field(const std::string& text, int dimension) {
  ExpressionField f;
  f.expression = parse_expression(text);
  for (int i = 0; i < dimension; ++i)
    f.gradient.push_back(f.expression->derivative(i));
  return f;
}

}  // namespace kcorr
