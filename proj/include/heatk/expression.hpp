#pragma once

#include <cctype>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "heatk/errors.hpp"

namespace heatk {

/// Arithmetic expression over named variables, used for per-edge weight and
/// per-vertex measure rules in family specs.
///
/// Grammar: sum := term (('+'|'-') term)*, term := unary (('*'|'/') unary)*,
/// unary := '-' unary | power, power := atom ('^' unary)?,
/// atom := number | variable | func '(' args ')' | '(' sum ')'.
/// Functions: exp, log, sqrt, abs, min, max, pow.
class Expression {
 public:
  static Expression parse(const std::string& text, std::vector<std::string> variables) {
    Expression e;
    e.variables_ = std::move(variables);
    Parser p{text, 0, e};
    e.root_ = p.sum();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    e.text_ = text;
    return e;
  }

  double operator()(std::span<const double> values) const {
    if (values.size() != variables_.size()) throw DomainError("expression expects " + std::to_string(variables_.size()) + " variables");
    return eval(root_, values);
  }

  const std::string& text() const noexcept { return text_; }

 private:
  enum class Op { number, variable, neg, add, sub, mul, div, pow, exp, log, sqrt, abs, min, max };
  struct Node {
    Op op;
    double number = 0.0;
    std::size_t var = 0;
    int lhs = -1;
    int rhs = -1;
  };

  int add(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  double eval(int i, std::span<const double> v) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::number: return n.number;
      case Op::variable: return v[n.var];
      case Op::neg: return -eval(n.lhs, v);
      case Op::add: return eval(n.lhs, v) + eval(n.rhs, v);
      case Op::sub: return eval(n.lhs, v) - eval(n.rhs, v);
      case Op::mul: return eval(n.lhs, v) * eval(n.rhs, v);
      case Op::div: return eval(n.lhs, v) / eval(n.rhs, v);
      case Op::pow: return std::pow(eval(n.lhs, v), eval(n.rhs, v));
      case Op::exp: return std::exp(eval(n.lhs, v));
      case Op::log: return std::log(eval(n.lhs, v));
      case Op::sqrt: return std::sqrt(eval(n.lhs, v));
      case Op::abs: return std::abs(eval(n.lhs, v));
      case Op::min: return std::min(eval(n.lhs, v), eval(n.rhs, v));
      case Op::max: return std::max(eval(n.lhs, v), eval(n.rhs, v));
    }
    return 0.0;
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;
    Expression& e;

    [[noreturn]] void fail(const std::string& what) const {
      throw ConfigError("expression", what + " at column " + std::to_string(pos) + " in '" + s + "'");
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    int sum() {
      int lhs = term();
      for (;;) {
        if (eat('+')) lhs = e.add({Op::add, 0, 0, lhs, term()});
        else if (eat('-')) lhs = e.add({Op::sub, 0, 0, lhs, term()});
        else return lhs;
      }
    }
    int term() {
      int lhs = unary();
      for (;;) {
        if (eat('*')) lhs = e.add({Op::mul, 0, 0, lhs, unary()});
        else if (eat('/')) lhs = e.add({Op::div, 0, 0, lhs, unary()});
        else return lhs;
      }
    }
    int unary() {
      if (eat('-')) return e.add({Op::neg, 0, 0, unary(), -1});
      return power();
    }
    int power() {
      int base = atom();
      if (eat('^')) return e.add({Op::pow, 0, 0, base, unary()});
      return base;
    }
    int atom() {
      skip();
      if (pos >= s.size()) fail("unexpected end");
      if (eat('(')) {
        int inner = sum();
        if (!eat(')')) fail("expected ')'");
        return inner;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double value = 0.0;
        try {
          value = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
          fail("bad number");
        }
        pos += used;
        return e.add({Op::number, value, 0, -1, -1});
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        const std::string name = s.substr(start, pos - start);
        if (eat('(')) return call(name);
        for (std::size_t i = 0; i < e.variables_.size(); ++i) {
          if (e.variables_[i] == name) return e.add({Op::variable, 0, i, -1, -1});
        }
        fail("unknown variable '" + name + "'");
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
    int call(const std::string& name) {
      static const std::vector<std::pair<std::string, Op>> unary_fns{
          {"exp", Op::exp}, {"log", Op::log}, {"sqrt", Op::sqrt}, {"abs", Op::abs}};
      static const std::vector<std::pair<std::string, Op>> binary_fns{{"min", Op::min}, {"max", Op::max}, {"pow", Op::pow}};
      for (const auto& [fn, op] : unary_fns) {
        if (fn == name) {
          int arg = sum();
          if (!eat(')')) fail("expected ')'");
          return e.add({op, 0, 0, arg, -1});
        }
      }
      for (const auto& [fn, op] : binary_fns) {
        if (fn == name) {
          int a = sum();
          if (!eat(',')) fail("expected ','");
          int b = sum();
          if (!eat(')')) fail("expected ')'");
          return e.add({op, 0, 0, a, b});
        }
      }
      fail("unknown function '" + name + "'");
    }
  };

  std::vector<std::string> variables_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::string text_;
};

}  // namespace heatk
