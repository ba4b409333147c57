#pragma once

// Small arithmetic expressions in x1 and x2, used to give the source and
// obstacle in configuration text.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | 'x1' | 'x2' | 'pi' | func '(' expr ')' | '(' expr ')'
//   func   := sin | cos | exp | sqrt | abs

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pumdd/pum_space.hpp"

namespace pumdd {

class ExpressionError : public std::runtime_error {
 public:
  ExpressionError(const std::string& message, std::size_t position);

  /// Offset of the offending character in the source text.
  [[nodiscard]] std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parsed expression, stored as a postfix program.
class Expression {
 public:
  /// Throws ExpressionError on malformed input.
  static Expression parse(std::string_view text);

  [[nodiscard]] double evaluate(Point x) const;
  [[nodiscard]] double operator()(Point x) const { return evaluate(x); }

  /// True when the expression does not reference x1 or x2.
  [[nodiscard]] bool is_constant() const;
  [[nodiscard]] const std::string& text() const { return text_; }

  enum class Op { constant, x1, x2, add, sub, mul, div, pow, neg, sin, cos, exp, sqrt, abs };
  struct Instruction {
    Op op = Op::constant;
    double value = 0.0;
  };

 private:
  std::string text_;
  std::vector<Instruction> program_;
};

}  // namespace pumdd
