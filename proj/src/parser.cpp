#include "swarmk/parser.hpp"

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace swarmk {

namespace {

enum class Tok {
  end,
  number,
  ident,
  kw_param,
  kw_state,
  kw_env,
  kw_rate,
  kw_exp,
  kw_ln,
  kw_step,
  kw_delay,
  kw_histint,
  lparen,
  rparen,
  colon,
  arrow,
  semicolon,
  comma,
  assign,
  plus_assign,
  minus_assign,
  plus,
  minus,
  star,
  slash,
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::end: return "end of input";
    case Tok::number: return "number";
    case Tok::ident: return "identifier";
    case Tok::kw_param: return "'param'";
    case Tok::kw_state: return "'state'";
    case Tok::kw_env: return "'env'";
    case Tok::kw_rate: return "'rate'";
    case Tok::kw_exp: return "'exp'";
    case Tok::kw_ln: return "'ln'";
    case Tok::kw_step: return "'step'";
    case Tok::kw_delay: return "'delay'";
    case Tok::kw_histint: return "'histint'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::colon: return "':'";
    case Tok::arrow: return "'->'";
    case Tok::semicolon: return "';'";
    case Tok::comma: return "','";
    case Tok::assign: return "'='";
    case Tok::plus_assign: return "'+='";
    case Tok::minus_assign: return "'-='";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
  }
  return "?";
}

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  SourceLoc loc;
};

const std::map<std::string, Tok>& keywords() {
  static const std::map<std::string, Tok> k{
      {"param", Tok::kw_param}, {"state", Tok::kw_state}, {"env", Tok::kw_env},
      {"rate", Tok::kw_rate},   {"exp", Tok::kw_exp},     {"ln", Tok::kw_ln},
      {"step", Tok::kw_step},   {"delay", Tok::kw_delay}, {"histint", Tok::kw_histint},
  };
  return k;
}

class Lexer {
 public:
  Lexer(const std::string& text, const std::string& origin) : s_(text), origin_(origin) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_blank();
      Token t;
      t.loc = {line_, col_};
      if (i_ >= s_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      char c = s_[i_];
      if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t b = i_;
        while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) advance();
        t.text = s_.substr(b, i_ - b);
        auto it = keywords().find(t.text);
        t.kind = it == keywords().end() ? Tok::ident : it->second;
      } else {
        lex_punct(t, c);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (s_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_blank() {
    while (i_ < s_.size()) {
      char c = s_[i_];
      if (c == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void lex_number(Token& t) {
    std::size_t b = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) advance();
    if (i_ < s_.size() && s_[i_] == '.') {
      advance();
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) advance();
    }
    if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
      SourceLoc eloc{line_, col_};
      advance();
      if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) advance();
      if (i_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        throw ParseError(ParseErrorKind::lexical, origin_, eloc, "malformed exponent in number");
      }
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) advance();
    }
    t.kind = Tok::number;
    t.text = s_.substr(b, i_ - b);
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
    if (res.ec != std::errc()) throw ParseError(ParseErrorKind::lexical, origin_, t.loc, "number out of range: " + t.text);
  }

  void lex_punct(Token& t, char c) {
    char next = i_ + 1 < s_.size() ? s_[i_ + 1] : '\0';
    auto two = [&](Tok k) {
      t.kind = k;
      t.text = s_.substr(i_, 2);
      advance();
      advance();
    };
    auto one = [&](Tok k) {
      t.kind = k;
      t.text = std::string(1, c);
      advance();
    };
    switch (c) {
      case '(': one(Tok::lparen); return;
      case ')': one(Tok::rparen); return;
      case ':': one(Tok::colon); return;
      case ';': one(Tok::semicolon); return;
      case ',': one(Tok::comma); return;
      case '=': one(Tok::assign); return;
      case '*': one(Tok::star); return;
      case '/': one(Tok::slash); return;
      case '+':
        if (next == '=') two(Tok::plus_assign); else one(Tok::plus);
        return;
      case '-':
        if (next == '>') two(Tok::arrow);
        else if (next == '=') two(Tok::minus_assign);
        else one(Tok::minus);
        return;
      default:
        break;
    }
    std::string shown = std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c) : "\\x" + std::to_string(static_cast<unsigned char>(c));
    throw ParseError(ParseErrorKind::lexical, origin_, t.loc, "unexpected character '" + shown + "'");
  }

  const std::string& s_;
  const std::string& origin_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct PendingRef {
  std::string name;
  SourceLoc loc;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string origin) : toks_(std::move(toks)), origin_(std::move(origin)) {}

  StateDiagram model() {
    StateDiagram d;
    while (peek().kind != Tok::end) {
      switch (peek().kind) {
        case Tok::kw_param: d.params.push_back(declaration()); break;
        case Tok::kw_state: d.states.push_back(declaration()); break;
        case Tok::kw_env: d.envs.push_back(declaration()); break;
        case Tok::kw_rate: d.transitions.push_back(transition()); break;
        default:
          fail_expected("'param', 'state', 'env' or 'rate'");
      }
    }
    return d;
  }

  Expr standalone_expr() {
    Expr e = expr();
    expect(Tok::end);
    return e;
  }

  std::map<const Transition*, std::pair<SourceLoc, SourceLoc>> endpoint_locs;
  std::vector<std::pair<SourceLoc, SourceLoc>> endpoints;  // per transition, in order

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail_expected(const std::string& what) {
    const Token& t = peek();
    std::string found = t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
    throw ParseError(ParseErrorKind::syntax, origin_, t.loc, "expected " + what + ", found " + found);
  }

  Token expect(Tok k) {
    if (peek().kind != k) fail_expected(describe(k));
    return take();
  }

  Declaration declaration() {
    take();  // keyword
    Token name = expect(Tok::ident);
    expect(Tok::assign);
    Expr value = expr();
    return Declaration{name.text, value, name.loc};
  }

  Transition transition() {
    Token kw = take();
    expect(Tok::lparen);
    Expr rate = expr();
    expect(Tok::rparen);
    expect(Tok::colon);
    Token src = expect(Tok::ident);
    expect(Tok::arrow);
    Token dst = expect(Tok::ident);
    Transition tr{src.text, dst.text, rate, {}, kw.loc};
    endpoints.emplace_back(src.loc, dst.loc);
    if (peek().kind == Tok::semicolon) {
      take();
      tr.effects.push_back(effect());
      while (peek().kind == Tok::comma) {
        take();
        tr.effects.push_back(effect());
      }
    }
    return tr;
  }

  EnvEffect effect() {
    Token name = expect(Tok::ident);
    bool subtract = false;
    if (peek().kind == Tok::plus_assign) {
      take();
    } else if (peek().kind == Tok::minus_assign) {
      take();
      subtract = true;
    } else {
      fail_expected("'+=' or '-='");
    }
    Expr amount = expr();
    return EnvEffect{name.text, subtract, amount, name.loc};
  }

  Expr expr() {
    Expr lhs = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      Token op = take();
      Expr rhs = term();
      lhs = Expr::binary(op.kind == Tok::plus ? ExprKind::add : ExprKind::sub, lhs, rhs, op.loc);
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      Token op = take();
      Expr rhs = unary();
      lhs = Expr::binary(op.kind == Tok::star ? ExprKind::mul : ExprKind::div, lhs, rhs, op.loc);
    }
    return lhs;
  }

  Expr unary() {
    if (peek().kind == Tok::minus) {
      Token op = take();
      // A minus directly before a number literal is part of the literal.
      if (peek().kind == Tok::number) {
        Token num = take();
        return Expr::number(-num.number, op.loc);
      }
      return Expr::unary(ExprKind::negate, unary(), op.loc);
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        Token n = take();
        return Expr::number(n.number, n.loc);
      }
      case Tok::ident: {
        Token n = take();
        return Expr::ident(n.text, n.loc);
      }
      case Tok::lparen: {
        take();
        Expr e = expr();
        expect(Tok::rparen);
        return e;
      }
      case Tok::kw_exp:
      case Tok::kw_ln:
      case Tok::kw_step: {
        Token f = take();
        expect(Tok::lparen);
        Expr a = expr();
        expect(Tok::rparen);
        ExprKind k = f.kind == Tok::kw_exp ? ExprKind::exp : f.kind == Tok::kw_ln ? ExprKind::ln : ExprKind::step;
        return Expr::unary(k, a, f.loc);
      }
      case Tok::kw_delay:
      case Tok::kw_histint: {
        Token f = take();
        expect(Tok::lparen);
        Expr a = expr();
        expect(Tok::comma);
        Expr b = expr();
        expect(Tok::rparen);
        return Expr::binary(f.kind == Tok::kw_delay ? ExprKind::delay : ExprKind::histint, a, b, f.loc);
      }
      default:
        fail_expected("expression");
    }
  }

  std::vector<Token> toks_;
  std::string origin_;
  std::size_t pos_ = 0;
};

class Resolver {
 public:
  Resolver(const StateDiagram& d, const std::string& origin) : d_(d), origin_(origin) {}

  void run(const std::vector<std::pair<SourceLoc, SourceLoc>>& endpoints) {
    std::set<std::string> seen;
    auto declare = [&](const std::vector<Declaration>& v) {
      for (const auto& x : v) {
        if (is_reserved_word(x.name)) fail(x.loc, x.name + " is reserved");
        if (!seen.insert(x.name).second) fail(x.loc, "duplicate name " + x.name);
      }
    };
    declare(d_.params);
    declare(d_.states);
    declare(d_.envs);

    for (const auto& p : d_.params) check(p.value, false, false);
    for (const auto& s : d_.states) check(s.value, false, false);
    for (const auto& e : d_.envs) check(e.value, false, false);
    for (std::size_t i = 0; i < d_.transitions.size(); ++i) {
      const auto& tr = d_.transitions[i];
      check(tr.rate, true, false);
      if (!d_.find_state(tr.source)) fail(endpoints[i].first, "unknown state " + tr.source);
      if (!d_.find_state(tr.target)) fail(endpoints[i].second, "unknown state " + tr.target);
      for (const auto& eff : tr.effects) {
        if (!d_.find_env(eff.env)) fail(eff.loc, eff.env + " is not an environment counter");
        check(eff.amount, true, false);
      }
    }
    try {
      resolve_params(d_);
    } catch (const ModelError& e) {
      fail(e.loc(), e.what());
    }
  }

 private:
  [[noreturn]] void fail(SourceLoc loc, const std::string& msg) {
    throw ParseError(ParseErrorKind::semantic, origin_, loc, msg);
  }

  void check(const Expr& e, bool rate_scope, bool in_history) {
    switch (e.kind()) {
      case ExprKind::identifier: {
        const std::string& n = e.name();
        if (d_.find_param(n)) return;
        bool dynamic = d_.find_state(n) || d_.find_env(n) || n == "t" || n == "N0";
        if (!dynamic) fail(e.loc(), "unknown identifier " + n);
        if (!rate_scope) fail(e.loc(), n + " cannot be used here; only parameters are allowed");
        return;
      }
      case ExprKind::delay:
      case ExprKind::histint:
        if (!rate_scope) fail(e.loc(), "history terms are only allowed in rates");
        if (in_history) fail(e.loc(), "nested delay/histint is not supported");
        check(e.arg(0), true, true);
        // The window must be known before integration starts.
        check(e.arg(1), false, true);
        return;
      default:
        for (std::size_t i = 0; i < e.arity(); ++i) check(e.arg(i), rate_scope, in_history);
    }
  }

  const StateDiagram& d_;
  const std::string& origin_;
};

}  // namespace

StateDiagram parse_model(const ModelSource& src) {
  Parser p(Lexer(src.text, src.origin).run(), src.origin);
  StateDiagram d = p.model();
  Resolver(d, src.origin).run(p.endpoints);
  d.name = src.origin;
  return d;
}

Expr parse_expr(const std::string& text) {
  const std::string origin = "<expr>";
  Parser p(Lexer(text, origin).run(), origin);
  return p.standalone_expr();
}

StateDiagram load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  StateDiagram d = parse_model({ss.str(), path});
  d.name = std::filesystem::path(path).stem().string();
  return d;
}

}  // namespace swarmk
