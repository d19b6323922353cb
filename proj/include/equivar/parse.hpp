#pragma once

// Recursive-descent parser for the expression grammar
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-'? atom ('^' factor)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//
// Functions: sin cos exp log sqrt atan. Any other identifier is a variable.

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

#include "equivar/error.hpp"
#include "equivar/expr.hpp"

namespace equivar {

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void unexpected() {
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = lhs + term();
      else if (accept('-'))
        lhs = lhs - term();
      else
        return lhs;
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (accept('*'))
        lhs = lhs * factor();
      else if (accept('/'))
        lhs = lhs / factor();
      else
        return lhs;
    }
  }

  Expr factor() {
    bool negate = accept('-');
    Expr base = atom();
    if (accept('^')) base = pow(base, factor());
    return negate ? neg(base) : base;
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= s_.size()) unexpected();
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (accept('(')) {
      Expr e = expr();
      if (!accept(')')) unexpected();
      return e;
    }
    unexpected();
  }

  Expr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
        digits();
      else
        pos_ = save;  // not an exponent; leave 'e' for the caller
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, value);
    if (ec != std::errc() || ptr != s_.data() + pos_) throw ParseError("malformed number", start);
    return Expr(value);
  }

  Expr identifier() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name(s_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      Expr (*fn)(const Expr&) = nullptr;
      if (name == "sin") fn = &equivar::sin;
      else if (name == "cos") fn = &equivar::cos;
      else if (name == "exp") fn = &equivar::exp;
      else if (name == "log") fn = &equivar::log;
      else if (name == "sqrt") fn = &equivar::sqrt;
      else if (name == "atan") fn = &equivar::atan;
      else throw ParseError("unknown function '" + name + "'", start);
      ++pos_;
      Expr arg = expr();
      if (!accept(')')) unexpected();
      return fn(arg);
    }
    return var(std::move(name));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view text) { return detail::Parser(text).parse_all(); }

}  // namespace equivar
