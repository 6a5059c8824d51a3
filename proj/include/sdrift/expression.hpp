#pragma once

// Small arithmetic expression language used by configuration files to
// describe analytic fields (potentials, forcing terms, test functions).
//
//   variables : x y z, r = |x'| = sqrt(x^2+y^2), rho = |x|
//   constants : pi e, decimal literals
//   operators : + - * / ^ (right associative), unary -
//   functions : sin cos tan exp log sqrt abs atan tanh sinh cosh
//               pos(a) = max(a,0), smoothstep(t) (quintic, clamped to [0,1])
//               min(a,b) max(a,b) pow(a,b)
//
// Expressions compile to a postfix program that evaluates over any scalar
// type with the usual math overloads (double, Jet).

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "sdrift/error.hpp"
#include "sdrift/jet.hpp"
#include "sdrift/vec3.hpp"

namespace sdrift {

class Expression {
 public:
  Expression() : Expression("0") {}
  explicit Expression(std::string source) : source_(std::move(source)) { compile(); }

  const std::string& source() const { return source_; }

  template <class T>
  T eval(const std::array<T, 3>& x) const;

  double operator()(const Vec3& x) const { return eval<double>(x); }

  /// Value, gradient and Hessian diagonal at a point.
  Jet jet(const Vec3& x) const {
    return eval<Jet>({Jet::variable(x[0], 0), Jet::variable(x[1], 1), Jet::variable(x[2], 2)});
  }

  /// True when the expression is the literal constant zero.
  bool is_zero() const { return code_.size() == 1 && code_[0].op == Op::constant && code_[0].value == 0.0; }

 private:
  enum class Op : unsigned char {
    constant, var_x, var_y, var_z, var_r, var_rho,
    add, sub, mul, div, pow, neg,
    sin, cos, tan, exp, log, sqrt, abs, atan, tanh, sinh, cosh, pos, smoothstep,
    min, max,
  };
  struct Instr {
    Op op;
    double value = 0.0;
  };
  static constexpr std::size_t max_depth = 64;

  void compile() {
    pos_ = 0;
    code_.clear();
    parse_expr();
    skip_ws();
    if (pos_ != source_.size()) fail("unexpected '" + std::string(1, source_[pos_]) + "'");
    // Validate stack depth once so eval can use a fixed array.
    std::size_t depth = 0, peak = 0;
    for (const auto& in : code_) {
      switch (arity(in.op)) {
        case 0: ++depth; break;
        case 2: --depth; break;
        default: break;
      }
      peak = std::max(peak, depth);
    }
    if (peak > max_depth) fail("expression nests too deeply");
  }

  static int arity(Op op) {
    switch (op) {
      case Op::constant: case Op::var_x: case Op::var_y: case Op::var_z: case Op::var_r: case Op::var_rho:
        return 0;
      case Op::add: case Op::sub: case Op::mul: case Op::div: case Op::pow: case Op::min: case Op::max:
        return 2;
      default:
        return 1;
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::parse, "expression '" + source_ + "': " + what);
  }

  void skip_ws() {
    while (pos_ < source_.size() && std::isspace(static_cast<unsigned char>(source_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < source_.size() && source_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  void parse_expr() {
    parse_term();
    for (;;) {
      if (accept('+')) {
        parse_term();
        code_.push_back({Op::add});
      } else if (accept('-')) {
        parse_term();
        code_.push_back({Op::sub});
      } else {
        return;
      }
    }
  }
  void parse_term() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        code_.push_back({Op::mul});
      } else if (accept('/')) {
        parse_unary();
        code_.push_back({Op::div});
      } else {
        return;
      }
    }
  }
  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      code_.push_back({Op::neg});
    } else if (accept('+')) {
      parse_unary();
    } else {
      parse_power();
    }
  }
  void parse_power() {
    parse_primary();
    if (accept('^')) {
      parse_unary();
      code_.push_back({Op::pow});
    }
  }
  void parse_primary() {
    skip_ws();
    if (pos_ >= source_.size()) fail("unexpected end of input");
    const char c = source_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = source_.c_str() + pos_;
      char* end = nullptr;
      const double value = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      code_.push_back({Op::constant, value});
      return;
    }
    if (accept('(')) {
      parse_expr();
      expect(')');
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < source_.size() &&
             (std::isalnum(static_cast<unsigned char>(source_[pos_])) || source_[pos_] == '_'))
        ++pos_;
      const std::string name = source_.substr(start, pos_ - start);
      skip_ws();
      if (pos_ < source_.size() && source_[pos_] == '(') {
        ++pos_;
        parse_call(name);
        return;
      }
      if (name == "x") code_.push_back({Op::var_x});
      else if (name == "y") code_.push_back({Op::var_y});
      else if (name == "z") code_.push_back({Op::var_z});
      else if (name == "r") code_.push_back({Op::var_r});
      else if (name == "rho") code_.push_back({Op::var_rho});
      else if (name == "pi") code_.push_back({Op::constant, pi});
      else if (name == "e") code_.push_back({Op::constant, std::exp(1.0)});
      else fail("unknown variable '" + name + "'");
      return;
    }
    fail(std::string("unexpected '") + c + "'");
  }
  void parse_call(const std::string& name) {
    struct Entry {
      std::string_view name;
      Op op;
    };
    static constexpr std::array<Entry, 16> unary{{
        {"sin", Op::sin}, {"cos", Op::cos}, {"tan", Op::tan}, {"exp", Op::exp},
        {"log", Op::log}, {"sqrt", Op::sqrt}, {"abs", Op::abs}, {"atan", Op::atan},
        {"tanh", Op::tanh}, {"sinh", Op::sinh}, {"cosh", Op::cosh}, {"pos", Op::pos},
        {"smoothstep", Op::smoothstep}, {"", Op::neg}, {"", Op::neg}, {"", Op::neg},
    }};
    for (const auto& e : unary) {
      if (!e.name.empty() && e.name == name) {
        parse_expr();
        expect(')');
        code_.push_back({e.op});
        return;
      }
    }
    Op op;
    if (name == "min") op = Op::min;
    else if (name == "max") op = Op::max;
    else if (name == "pow") op = Op::pow;
    else fail("unknown function '" + name + "'");
    parse_expr();
    expect(',');
    parse_expr();
    expect(')');
    code_.push_back({op});
  }

  std::string source_;
  std::vector<Instr> code_;
  std::size_t pos_ = 0;
};

template <class T>
T Expression::eval(const std::array<T, 3>& x) const {
  using std::abs, std::atan, std::cos, std::cosh, std::exp, std::log, std::max, std::min, std::pow,
      std::sin, std::sinh, std::sqrt, std::tan, std::tanh;
  std::array<T, max_depth> stack;
  std::size_t top = 0;
  auto pop = [&]() -> T { return stack[--top]; };
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::constant: stack[top++] = T(in.value); break;
      case Op::var_x: stack[top++] = x[0]; break;
      case Op::var_y: stack[top++] = x[1]; break;
      case Op::var_z: stack[top++] = x[2]; break;
      case Op::var_r: stack[top++] = sqrt(x[0] * x[0] + x[1] * x[1]); break;
      case Op::var_rho: stack[top++] = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); break;
      case Op::add: { T b = pop(); T a = pop(); stack[top++] = a + b; break; }
      case Op::sub: { T b = pop(); T a = pop(); stack[top++] = a - b; break; }
      case Op::mul: { T b = pop(); T a = pop(); stack[top++] = a * b; break; }
      case Op::div: { T b = pop(); T a = pop(); stack[top++] = a / b; break; }
      case Op::pow: { T b = pop(); T a = pop(); stack[top++] = pow(a, b); break; }
      case Op::min: { T b = pop(); T a = pop(); stack[top++] = min(a, b); break; }
      case Op::max: { T b = pop(); T a = pop(); stack[top++] = max(a, b); break; }
      case Op::neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::sin: stack[top - 1] = sin(stack[top - 1]); break;
      case Op::cos: stack[top - 1] = cos(stack[top - 1]); break;
      case Op::tan: stack[top - 1] = tan(stack[top - 1]); break;
      case Op::exp: stack[top - 1] = exp(stack[top - 1]); break;
      case Op::log: stack[top - 1] = log(stack[top - 1]); break;
      case Op::sqrt: stack[top - 1] = sqrt(stack[top - 1]); break;
      case Op::abs: stack[top - 1] = abs(stack[top - 1]); break;
      case Op::atan: stack[top - 1] = atan(stack[top - 1]); break;
      case Op::tanh: stack[top - 1] = tanh(stack[top - 1]); break;
      case Op::sinh: stack[top - 1] = sinh(stack[top - 1]); break;
      case Op::cosh: stack[top - 1] = cosh(stack[top - 1]); break;
      case Op::pos: stack[top - 1] = max(stack[top - 1], T(0.0)); break;
      case Op::smoothstep: {
        T t = min(max(stack[top - 1], T(0.0)), T(1.0));
        stack[top - 1] = t * t * t * (T(10.0) + t * (T(-15.0) + T(6.0) * t));
        break;
      }
    }
  }
  return stack[0];
}

/// Three component expressions, written as a comma separated list at top level.
class VectorExpression {
 public:
  VectorExpression() = default;
  explicit VectorExpression(const std::string& source) : source_(source) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string current;
    for (char c : source) {
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (c == ',' && depth == 0) {
        parts.push_back(current);
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    parts.push_back(current);
    if (parts.size() != 3)
      throw Error(Errc::parse, "vector expression '" + source + "' needs 3 comma separated components");
    for (std::size_t i = 0; i < 3; ++i) components_[i] = Expression(parts[i]);
  }

  const std::string& source() const { return source_; }
  const Expression& operator[](std::size_t i) const { return components_[i]; }

  Vec3 operator()(const Vec3& x) const { return {components_[0](x), components_[1](x), components_[2](x)}; }

  bool is_zero() const { return components_[0].is_zero() && components_[1].is_zero() && components_[2].is_zero(); }

  /// Analytic curl through forward differentiation of each component.
  Vec3 curl(const Vec3& x) const {
    const Jet a = components_[0].jet(x);
    const Jet b = components_[1].jet(x);
    const Jet c = components_[2].jet(x);
    return {c.d[1] - b.d[2], a.d[2] - c.d[0], b.d[0] - a.d[1]};
  }

 private:
  std::string source_ = "0,0,0";
  std::array<Expression, 3> components_{};
};

}  // namespace sdrift
