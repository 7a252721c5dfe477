#pragma once

// Expression grammar shared by configs and tests.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('+' | '-') unary | power
//   power  := atom ('^' integer)?
//   atom   := number | 'i' | 'z' | 'w' digits | 'exp' '(' expr ')' | '(' expr ')'
//   number := digits ('.' digits)? (('e' | 'E') ('+' | '-')? digits)?
//
// Numbers are kept as text so that divisor polynomials can be read exactly:
// "0.25" becomes 1/4 and "1/3" is an exact quotient. Functions of z are
// evaluated to (numerator, denominator) pairs of holomorphic expressions;
// polynomials in w0..wn are evaluated over Q(i). Every error carries the
// offset (0-based) of the offending token.

#include <cctype>
#include <complex>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nevlab/divisor.hpp"
#include "nevlab/error.hpp"
#include "nevlab/holo.hpp"

namespace nevlab::expr {

struct Node {
  enum class Kind { number, imag, z, w, add, sub, mul, div, neg, pow, exp };
  Kind kind = Kind::number;
  std::size_t pos = 0;
  std::string text;  ///< literal digits for numbers
  int index = 0;     ///< variable index for w, exponent for pow
  std::vector<std::unique_ptr<Node>> args;
};

using NodePtr = std::unique_ptr<Node>;

class Parser {
 public:
  explicit Parser(std::string_view src) : s_(src) {}

  NodePtr parse() {
    skip();
    if (i_ == s_.size()) throw ParseError("empty expression", i_);
    auto e = expr();
    skip();
    if (i_ != s_.size()) throw ParseError(std::string("unexpected '") + s_[i_] + "'", i_);
    return e;
  }

 private:
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool peek(char c) {
    skip();
    return i_ < s_.size() && s_[i_] == c;
  }
  void expect(char c) {
    if (!peek(c)) {
      if (i_ == s_.size()) throw ParseError(std::string("expected '") + c + "' but the input ended", i_);
      throw ParseError(std::string("expected '") + c + "'", i_);
    }
    ++i_;
  }
  static NodePtr make(Node::Kind k, std::size_t pos) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    n->pos = pos;
    return n;
  }
  static NodePtr binary(Node::Kind k, std::size_t pos, NodePtr a, NodePtr b) {
    auto n = make(k, pos);
    n->args.push_back(std::move(a));
    n->args.push_back(std::move(b));
    return n;
  }

  NodePtr expr() {
    auto lhs = term();
    while (peek('+') || peek('-')) {
      const std::size_t pos = i_;
      const char op = s_[i_++];
      lhs = binary(op == '+' ? Node::Kind::add : Node::Kind::sub, pos, std::move(lhs), term());
    }
    return lhs;
  }

  NodePtr term() {
    auto lhs = unary();
    while (peek('*') || peek('/')) {
      const std::size_t pos = i_;
      const char op = s_[i_++];
      lhs = binary(op == '*' ? Node::Kind::mul : Node::Kind::div, pos, std::move(lhs), unary());
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek('+')) {
      ++i_;
      return unary();
    }
    if (peek('-')) {
      auto n = make(Node::Kind::neg, i_++);
      n->args.push_back(unary());
      return n;
    }
    return power();
  }

  NodePtr power() {
    auto base = atom();
    if (peek('^')) {
      const std::size_t pos = i_++;
      skip();
      const std::size_t start = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (start == i_) throw ParseError("exponent must be a non-negative integer", start);
      if (i_ - start > 4) throw ParseError("exponent too large", start);
      auto n = make(Node::Kind::pow, pos);
      n->index = std::stoi(std::string(s_.substr(start, i_ - start)));
      n->args.push_back(std::move(base));
      return n;
    }
    return base;
  }

  NodePtr atom() {
    skip();
    if (i_ == s_.size()) throw ParseError("expected an operand but the input ended", i_);
    const std::size_t pos = i_;
    const char c = s_[i_];
    if (c == '(') {
      ++i_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < s_.size() && std::isalnum(static_cast<unsigned char>(s_[j]))) ++j;
      const std::string word(s_.substr(i_, j - i_));
      i_ = j;
      if (word == "z") return make(Node::Kind::z, pos);
      if (word == "i") return make(Node::Kind::imag, pos);
      if (word == "exp") {
        expect('(');
        auto n = make(Node::Kind::exp, pos);
        n->args.push_back(expr());
        expect(')');
        return n;
      }
      if (word.size() > 1 && word[0] == 'w' &&
          word.find_first_not_of("0123456789", 1) == std::string::npos) {
        if (word.size() > 4) throw ParseError("variable index too large", pos);
        auto n = make(Node::Kind::w, pos);
        n->index = std::stoi(word.substr(1));
        return n;
      }
      throw ParseError("unknown identifier '" + word + "'", pos);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos);
  }

  NodePtr number() {
    const std::size_t pos = i_;
    auto digits = [&] {
      const std::size_t a = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      return i_ - a;
    };
    std::size_t count = digits();
    if (i_ < s_.size() && s_[i_] == '.') {
      ++i_;
      count += digits();
    }
    if (count == 0) throw ParseError("malformed number", pos);
    if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
      // only an exponent if digits follow; "2exp(z)" is not valid anyway
      std::size_t j = i_ + 1;
      if (j < s_.size() && (s_[j] == '+' || s_[j] == '-')) ++j;
      if (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) {
        i_ = j;
        digits();
      }
    }
    auto n = make(Node::Kind::number, pos);
    n->text = std::string(s_.substr(pos, i_ - pos));
    return n;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

inline NodePtr parse(std::string_view src) { return Parser(src).parse(); }

/// Exact value of a decimal literal.
inline Rational literal_rational(const std::string& text, std::size_t pos) {
  std::string mant = text;
  long exp10 = 0;
  if (const auto e = text.find_first_of("eE"); e != std::string::npos) {
    mant = text.substr(0, e);
    exp10 = std::stol(text.substr(e + 1));
  }
  if (exp10 > 300 || exp10 < -300) throw ParseError("literal exponent out of range", pos);
  std::string digits;
  for (char c : mant) {
    if (c == '.') continue;
    digits += c;
  }
  if (const auto dot = mant.find('.'); dot != std::string::npos) exp10 -= static_cast<long>(mant.size() - dot - 1);
  // cpp_int reads a leading 0 as an octal prefix
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  boost::multiprecision::cpp_int num(digits);
  boost::multiprecision::cpp_int ten = boost::multiprecision::pow(boost::multiprecision::cpp_int(10),
                                                                   static_cast<unsigned>(exp10 < 0 ? -exp10 : exp10));
  return exp10 < 0 ? Rational(num, ten) : Rational(num * ten);
}

// ---------------------------------------------------------------------------
// Functions of z

/// Evaluates to numerator / denominator. Division by any non-zero expression
/// is allowed; exp() needs a polynomial argument.
inline MeromorphicFn to_meromorphic(const Node& n) {
  using K = Node::Kind;
  auto one = HoloExpr::constant(1.0);
  switch (n.kind) {
    case K::number:
      return MeromorphicFn(HoloExpr::constant(std::stod(n.text)));
    case K::imag:
      return MeromorphicFn(HoloExpr::constant(cplx(0.0, 1.0)));
    case K::z:
      return MeromorphicFn(HoloExpr::z());
    case K::w:
      throw ParseError("projective variables are not allowed in a function of z", n.pos);
    case K::neg: {
      auto a = to_meromorphic(*n.args[0]);
      return MeromorphicFn(-a.numerator, a.denominator);
    }
    case K::add:
    case K::sub: {
      auto a = to_meromorphic(*n.args[0]);
      auto b = to_meromorphic(*n.args[1]);
      HoloExpr bn = n.kind == K::add ? b.numerator : -b.numerator;
      if (a.denominator.is_constant() && b.denominator.is_constant()) {
        const cplx da = a.denominator.as_polynomial()[0], db = b.denominator.as_polynomial()[0];
        return MeromorphicFn(a.numerator * HoloExpr::constant(1.0 / da) + bn * HoloExpr::constant(1.0 / db));
      }
      return MeromorphicFn(a.numerator * b.denominator + bn * a.denominator, a.denominator * b.denominator);
    }
    case K::mul: {
      auto a = to_meromorphic(*n.args[0]);
      auto b = to_meromorphic(*n.args[1]);
      return MeromorphicFn(a.numerator * b.numerator, a.denominator * b.denominator);
    }
    case K::div: {
      auto a = to_meromorphic(*n.args[0]);
      auto b = to_meromorphic(*n.args[1]);
      if (b.numerator.is_zero()) throw ParseError("division by zero", n.pos);
      if (b.numerator.is_constant()) {
        const cplx c = b.numerator.as_polynomial()[0];
        return MeromorphicFn(a.numerator * b.denominator * HoloExpr::constant(1.0 / c), a.denominator);
      }
      return MeromorphicFn(a.numerator * b.denominator, a.denominator * b.numerator);
    }
    case K::pow: {
      auto a = to_meromorphic(*n.args[0]);
      return MeromorphicFn(pow(a.numerator, n.index), pow(a.denominator, n.index));
    }
    case K::exp: {
      auto a = to_meromorphic(*n.args[0]);
      if (!a.denominator.is_constant() || !a.numerator.is_polynomial())
        throw ParseError("exp() needs a polynomial argument", n.pos);
      const cplx d = a.denominator.as_polynomial()[0];
      return MeromorphicFn(HoloExpr::exp(a.numerator * HoloExpr::constant(1.0 / d)), one);
    }
  }
  throw ParseError("unhandled node", n.pos);
}

inline MeromorphicFn parse_meromorphic(std::string_view src) { return to_meromorphic(*parse(src)); }

/// An entire expression: the denominator must reduce to a constant.
inline HoloExpr parse_holo(std::string_view src) {
  const auto root = parse(src);
  auto m = to_meromorphic(*root);
  if (!m.denominator.is_constant())
    throw ParseError("expected an entire expression; division by a non-constant is not allowed here", root->pos);
  const cplx d = m.denominator.as_polynomial()[0];
  return m.numerator * HoloExpr::constant(1.0 / d);
}

// ---------------------------------------------------------------------------
// Polynomials in w0..wn over Q(i)

using SparsePoly = std::map<Monomial, GaussRat>;

namespace detail {

inline void add_into(SparsePoly& a, const SparsePoly& b, const GaussRat& s) {
  for (const auto& [m, c] : b) {
    auto& slot = a[m];
    slot += s * c;
    if (slot.is_zero()) a.erase(m);
  }
}

inline SparsePoly mul(const SparsePoly& a, const SparsePoly& b) {
  SparsePoly out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) {
      Monomial m(ma.size());
      for (std::size_t k = 0; k < m.size(); ++k) m[k] = ma[k] + mb[k];
      auto& slot = out[m];
      slot += ca * cb;
      if (slot.is_zero()) out.erase(m);
    }
  return out;
}

inline SparsePoly eval_exact(const Node& n, int dim) {
  using K = Node::Kind;
  auto constant = [&](GaussRat c) {
    SparsePoly p;
    if (!c.is_zero()) p[Monomial(dim + 1, 0)] = std::move(c);
    return p;
  };
  switch (n.kind) {
    case K::number:
      return constant(GaussRat(literal_rational(n.text, n.pos)));
    case K::imag:
      return constant(GaussRat(Rational(0), Rational(1)));
    case K::z:
      throw ParseError("z is not allowed in a projective polynomial; use w0..w" + std::to_string(dim), n.pos);
    case K::exp:
      throw ParseError("exp() is not allowed in a projective polynomial", n.pos);
    case K::w: {
      if (n.index > dim)
        throw ParseError("variable w" + std::to_string(n.index) + " exceeds the projective dimension " +
                             std::to_string(dim),
                         n.pos);
      Monomial m(dim + 1, 0);
      m[n.index] = 1;
      return SparsePoly{{m, GaussRat(1)}};
    }
    case K::neg: {
      SparsePoly out;
      add_into(out, eval_exact(*n.args[0], dim), GaussRat(-1));
      return out;
    }
    case K::add:
    case K::sub: {
      SparsePoly out = eval_exact(*n.args[0], dim);
      add_into(out, eval_exact(*n.args[1], dim), GaussRat(n.kind == K::add ? 1 : -1));
      return out;
    }
    case K::mul:
      return mul(eval_exact(*n.args[0], dim), eval_exact(*n.args[1], dim));
    case K::div: {
      const SparsePoly b = eval_exact(*n.args[1], dim);
      if (b.empty()) throw ParseError("division by zero", n.pos);
      if (b.size() != 1 || std::any_of(b.begin()->first.begin(), b.begin()->first.end(), [](int e) { return e != 0; }))
        throw ParseError("a projective polynomial can only be divided by a constant", n.pos);
      SparsePoly out;
      add_into(out, eval_exact(*n.args[0], dim), GaussRat(1) / b.begin()->second);
      return out;
    }
    case K::pow: {
      const SparsePoly a = eval_exact(*n.args[0], dim);
      SparsePoly out = constant(GaussRat(1));
      for (int k = 0; k < n.index; ++k) out = mul(out, a);
      return out;
    }
  }
  throw ParseError("unhandled node", n.pos);
}

}  // namespace detail

/// Homogeneous polynomial in w0..w{dim} with exact coefficients.
inline HomogeneousPoly parse_homogeneous(std::string_view src, int dim) {
  const auto root = parse(src);
  const SparsePoly p = detail::eval_exact(*root, dim);
  if (p.empty()) throw ParseError("polynomial is identically zero", root->pos);
  HomogeneousPoly out(dim);
  const int d = std::accumulate(p.begin()->first.begin(), p.begin()->first.end(), 0);
  for (const auto& [m, c] : p) {
    if (std::accumulate(m.begin(), m.end(), 0) != d) throw ParseError("polynomial is not homogeneous", root->pos);
    out.add_term(m, c);
  }
  return out;
}

/// Largest w-index used, or -1 when the expression has none.
inline int max_variable(const Node& n) {
  int best = n.kind == Node::Kind::w ? n.index : -1;
  for (const auto& a : n.args) best = std::max(best, max_variable(*a));
  return best;
}

}  // namespace nevlab::expr
