#include <cctype>
#include <cstdlib>
#include <optional>

#include "metacog/stl/ast.hpp"

namespace metacog::stl {

namespace {

enum class Tok {
  End,
  Ident,
  Number,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Amp,
  Pipe,
  Bang,
  Lt,
  Gt,
  Le,
  Ge,
  Plus,
  Minus,
  Star,
  Slash,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { tokenize(); }

  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  void tokenize() {
    std::size_t i = 0;
    int line = 1, col = 1;
    auto push = [&](Tok k, std::string text) {
      Token t;
      t.kind = k;
      t.text = std::move(text);
      t.line = line;
      t.col = col;
      tokens_.push_back(std::move(t));
    };
    while (i < src_.size()) {
      char c = src_[i];
      if (c == '\n') {
        ++line;
        col = 1;
        ++i;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        ++col;
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
        push(Tok::Ident, src_.substr(i, j - i));
        col += static_cast<int>(j - i);
        i = j;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && i + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i + 1])))) {
        char* end = nullptr;
        double v = std::strtod(src_.c_str() + i, &end);
        std::size_t j = static_cast<std::size_t>(end - src_.c_str());
        Token t;
        t.kind = Tok::Number;
        t.text = src_.substr(i, j - i);
        t.number = v;
        t.line = line;
        t.col = col;
        tokens_.push_back(std::move(t));
        col += static_cast<int>(j - i);
        i = j;
        continue;
      }
      auto two = [&](char n) { return i + 1 < src_.size() && src_[i + 1] == n; };
      switch (c) {
        case '(': push(Tok::LParen, "("); break;
        case ')': push(Tok::RParen, ")"); break;
        case '[': push(Tok::LBracket, "["); break;
        case ']': push(Tok::RBracket, "]"); break;
        case ',': push(Tok::Comma, ","); break;
        case '&': push(Tok::Amp, "&"); break;
        case '|': push(Tok::Pipe, "|"); break;
        case '!': push(Tok::Bang, "!"); break;
        case '+': push(Tok::Plus, "+"); break;
        case '-': push(Tok::Minus, "-"); break;
        case '*': push(Tok::Star, "*"); break;
        case '/': push(Tok::Slash, "/"); break;
        case '<':
          if (two('=')) {
            push(Tok::Le, "<=");
            ++i;
            ++col;
          } else {
            push(Tok::Lt, "<");
          }
          break;
        case '>':
          if (two('=')) {
            push(Tok::Ge, ">=");
            ++i;
            ++col;
          } else {
            push(Tok::Gt, ">");
          }
          break;
        default:
          throw ParseError(std::string("unexpected character '") + c + "'", line, col);
      }
      ++i;
      ++col;
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.col = col;
    tokens_.push_back(end);
  }

  const std::string& src_;
  std::vector<Token> tokens_;
};

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& schema)
      : lexer_(text), schema_(schema) {}

  FormulaPtr parse() {
    FormulaPtr f = parse_or();
    expect(Tok::End, "end of input");
    return f;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    const auto& toks = lexer_.tokens();
    return i < toks.size() ? toks[i] : toks.back();
  }
  const Token& advance() { return lexer_.tokens()[pos_++]; }
  bool accept(Tok k) {
    if (peek().kind == k) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(Tok k, const std::string& what) {
    if (!accept(k)) {
      const Token& t = peek();
      throw ParseError("expected " + what + ", found '" + (t.kind == Tok::End ? "<end>" : t.text) + "'", t.line, t.col);
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw ParseError(msg, t.line, t.col);
  }

  FormulaPtr parse_or() {
    FormulaPtr f = parse_and();
    while (accept(Tok::Pipe)) f = Formula::disjunction(f, parse_and());
    return f;
  }

  FormulaPtr parse_and() {
    FormulaPtr f = parse_primary();
    while (accept(Tok::Amp)) f = Formula::conjunction(f, parse_primary());
    return f;
  }

  Interval parse_interval() {
    expect(Tok::LBracket, "'['");
    double a = parse_signed_number();
    expect(Tok::Comma, "','");
    double b = parse_signed_number();
    expect(Tok::RBracket, "']'");
    if (a < 0.0 || b < a) {
      const Token& t = peek();
      throw ParseError("inverted or negative interval", t.line, t.col);
    }
    return {a, b};
  }

  double parse_signed_number() {
    bool neg = accept(Tok::Minus);
    if (peek().kind != Tok::Number) fail("expected number in interval");
    double v = advance().number;
    return neg ? -v : v;
  }

  FormulaPtr parse_primary() {
    const Token& t = peek();
    if (t.kind == Tok::Bang) {
      advance();
      return Formula::negation(parse_primary());
    }
    if (t.kind == Tok::Ident && (t.text == "G" || t.text == "F") && peek(1).kind == Tok::LBracket) {
      std::string op = advance().text;
      Interval iv = parse_interval();
      expect(Tok::LParen, "'('");
      FormulaPtr child = parse_or();
      expect(Tok::RParen, "')'");
      return op == "G" ? Formula::always(iv.a, iv.b, child) : Formula::eventually(iv.a, iv.b, child);
    }
    if (t.kind == Tok::Ident && t.text == "T" && !starts_expression_tail(1)) {
      advance();
      return Formula::truth();
    }
    if (t.kind == Tok::LParen) {
      // Either a parenthesized (sub)formula, possibly an until, or a
      // parenthesized arithmetic expression opening a comparison.
      std::size_t save = pos_;
      try {
        advance();
        FormulaPtr lhs = parse_or();
        if (peek().kind == Tok::Ident && peek().text == "U") {
          advance();
          Interval iv = parse_interval();
          FormulaPtr rhs = parse_or();
          expect(Tok::RParen, "')'");
          return Formula::until(iv.a, iv.b, lhs, rhs);
        }
        expect(Tok::RParen, "')'");
        if (starts_expression_tail(0)) throw ParseError("comparison follows formula", t.line, t.col);
        return lhs;
      } catch (const ParseError&) {
        pos_ = save;  // fall through to comparison atom
      }
    }
    return parse_comparison();
  }

  bool starts_expression_tail(std::size_t ahead) const {
    switch (peek(ahead).kind) {
      case Tok::Lt:
      case Tok::Gt:
      case Tok::Le:
      case Tok::Ge:
      case Tok::Plus:
      case Tok::Minus:
      case Tok::Star:
      case Tok::Slash:
        return true;
      default:
        return false;
    }
  }

  FormulaPtr parse_comparison() {
    ExprPtr lhs = parse_expr();
    Tok cmp = peek().kind;
    if (cmp != Tok::Lt && cmp != Tok::Gt && cmp != Tok::Le && cmp != Tok::Ge)
      fail("expected comparison operator");
    advance();
    ExprPtr rhs = parse_expr();
    // z > c and z >= c quantify as z - c; z < c and z <= c as c - z.
    ExprPtr z;
    const bool greater = (cmp == Tok::Gt || cmp == Tok::Ge);
    const ExprPtr& big = greater ? lhs : rhs;
    const ExprPtr& small = greater ? rhs : lhs;
    if (small->op == ExprOp::Const && small->value == 0.0)
      z = big;
    else
      z = Expr::binary(ExprOp::Sub, big, small);
    Predicate p;
    p.name = to_string(*z);
    p.expr = z;
    return Formula::predicate(std::move(p));
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    while (true) {
      if (accept(Tok::Plus))
        e = Expr::binary(ExprOp::Add, e, parse_term());
      else if (accept(Tok::Minus))
        e = Expr::binary(ExprOp::Sub, e, parse_term());
      else
        return e;
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    while (true) {
      if (accept(Tok::Star))
        e = Expr::binary(ExprOp::Mul, e, parse_factor());
      else if (accept(Tok::Slash))
        e = Expr::binary(ExprOp::Div, e, parse_factor());
      else
        return e;
    }
  }

  ExprPtr parse_factor() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Minus:
        advance();
        return Expr::unary(ExprOp::Neg, parse_factor());
      case Tok::Number:
        advance();
        return Expr::constant(t.number);
      case Tok::LParen: {
        advance();
        ExprPtr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        advance();
        if (t.text == "abs" || t.text == "min" || t.text == "max" || t.text == "norm2") {
          ExprOp op = t.text == "abs"   ? ExprOp::Abs
                      : t.text == "min" ? ExprOp::Min
                      : t.text == "max" ? ExprOp::Max
                                        : ExprOp::Norm2;
          expect(Tok::LParen, "'('");
          std::vector<ExprPtr> args;
          args.push_back(parse_expr());
          while (accept(Tok::Comma)) args.push_back(parse_expr());
          expect(Tok::RParen, "')'");
          if (op == ExprOp::Abs && args.size() != 1)
            throw ParseError("abs takes one argument", t.line, t.col);
          if ((op == ExprOp::Min || op == ExprOp::Max) && args.size() < 2)
            throw ParseError(t.text + " takes at least two arguments", t.line, t.col);
          return Expr::nary(op, std::move(args));
        }
        for (std::size_t i = 0; i < schema_.size(); ++i)
          if (schema_[i] == t.text) return Expr::var(static_cast<int>(i), t.text);
        throw ParseError("unknown signal component '" + t.text + "'", t.line, t.col);
      }
      default:
        fail("expected expression");
    }
  }

  Lexer lexer_;
  const std::vector<std::string>& schema_;
  std::size_t pos_ = 0;
};

}  // namespace

FormulaPtr parse_formula(const std::string& text, const std::vector<std::string>& schema) {
  if (text.empty()) throw ParseError("empty formula", 1, 1);
  return Parser(text, schema).parse();
}

}  // namespace metacog::stl
