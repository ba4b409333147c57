#include "pumdd/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace pumdd {

ExpressionError::ExpressionError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " at offset " + std::to_string(position)),
      position_(position) {}

namespace {

using Op = Expression::Op;
using Instruction = Expression::Instruction;

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::vector<Instruction> run() {
    expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw ExpressionError(message, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        out_.push_back({Op::add});
      } else if (accept('-')) {
        term();
        out_.push_back({Op::sub});
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        out_.push_back({Op::mul});
      } else if (accept('/')) {
        unary();
        out_.push_back({Op::div});
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      out_.push_back({Op::neg});
      return;
    }
    if (accept('+')) {
      unary();
      return;
    }
    power();
  }

  void power() {
    atom();
    if (accept('^')) {
      unary();
      out_.push_back({Op::pow});
    }
  }

  void atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      expr();
      expect(')');
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t begin = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(begin, pos_ - begin);
      if (name == "x1") {
        out_.push_back({Op::x1});
      } else if (name == "x2") {
        out_.push_back({Op::x2});
      } else if (name == "pi") {
        out_.push_back({Op::constant, std::numbers::pi});
      } else {
        Op f;
        if (name == "sin") {
          f = Op::sin;
        } else if (name == "cos") {
          f = Op::cos;
        } else if (name == "exp") {
          f = Op::exp;
        } else if (name == "sqrt") {
          f = Op::sqrt;
        } else if (name == "abs") {
          f = Op::abs;
        } else {
          pos_ = begin;
          fail("unknown identifier '" + std::string(name) + "'");
        }
        expect('(');
        expr();
        expect(')');
        out_.push_back({f});
      }
      return;
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  void number() {
    double value = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    out_.push_back({Op::constant, value});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Instruction> out_;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  e.program_ = Parser(text).run();
  return e;
}

bool Expression::is_constant() const {
  for (const auto& ins : program_) {
    if (ins.op == Op::x1 || ins.op == Op::x2) return false;
  }
  return true;
}

double Expression::evaluate(Point x) const {
  std::vector<double> stack;
  stack.reserve(program_.size());
  auto pop = [&stack]() {
    const double v = stack.back();
    stack.pop_back();
    return v;
  };
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::constant: stack.push_back(ins.value); break;
      case Op::x1: stack.push_back(x.x1); break;
      case Op::x2: stack.push_back(x.x2); break;
      case Op::neg: stack.back() = -stack.back(); break;
      case Op::sin: stack.back() = std::sin(stack.back()); break;
      case Op::cos: stack.back() = std::cos(stack.back()); break;
      case Op::exp: stack.back() = std::exp(stack.back()); break;
      case Op::sqrt: stack.back() = std::sqrt(stack.back()); break;
      case Op::abs: stack.back() = std::abs(stack.back()); break;
      case Op::add: {
        const double r = pop();
        stack.back() += r;
        break;
      }
      case Op::sub: {
        const double r = pop();
        stack.back() -= r;
        break;
      }
      case Op::mul: {
        const double r = pop();
        stack.back() *= r;
        break;
      }
      case Op::div: {
        const double r = pop();
        stack.back() /= r;
        break;
      }
      case Op::pow: {
        const double r = pop();
        stack.back() = std::pow(stack.back(), r);
        break;
      }
    }
  }
  return stack.back();
}

}  // namespace pumdd
