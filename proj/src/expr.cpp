#include "swarmk/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "swarmk/errors.hpp"

namespace swarmk {

struct Expr::Node {
  ExprKind kind = ExprKind::number;
  double value = 0.0;
  std::string name;
  std::vector<Expr> args;
  SourceLoc loc;
};

Expr::Expr() : node_(std::make_shared<const Node>()) {}
Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::number(double value, SourceLoc loc) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::number;
  n->value = value;
  n->loc = loc;
  return Expr(std::move(n));
}

Expr Expr::ident(std::string name, SourceLoc loc) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::identifier;
  n->name = std::move(name);
  n->loc = loc;
  return Expr(std::move(n));
}

Expr Expr::unary(ExprKind kind, Expr arg, SourceLoc loc) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args.push_back(std::move(arg));
  n->loc = loc;
  return Expr(std::move(n));
}

Expr Expr::binary(ExprKind kind, Expr lhs, Expr rhs, SourceLoc loc) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  n->loc = loc;
  return Expr(std::move(n));
}

ExprKind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
std::size_t Expr::arity() const { return node_->args.size(); }
const Expr& Expr::arg(std::size_t i) const { return node_->args.at(i); }
SourceLoc Expr::loc() const { return node_->loc; }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ExprKind::number:
      return std::memcmp(&a.node_->value, &b.node_->value, sizeof(double)) == 0;
    case ExprKind::identifier:
      return a.name() == b.name();
    default:
      break;
  }
  if (a.arity() != b.arity()) return false;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    if (a.arg(i) != b.arg(i)) return false;
  }
  return true;
}

Expr operator+(Expr a, Expr b) { return Expr::binary(ExprKind::add, std::move(a), std::move(b)); }
Expr operator-(Expr a, Expr b) { return Expr::binary(ExprKind::sub, std::move(a), std::move(b)); }
Expr operator*(Expr a, Expr b) { return Expr::binary(ExprKind::mul, std::move(a), std::move(b)); }
Expr operator/(Expr a, Expr b) { return Expr::binary(ExprKind::div, std::move(a), std::move(b)); }
Expr operator-(Expr a) { return Expr::unary(ExprKind::negate, std::move(a)); }

Expr operator+(Expr a, double b) { return std::move(a) + Expr::number(b); }
Expr operator-(Expr a, double b) { return std::move(a) - Expr::number(b); }
Expr operator*(Expr a, double b) { return std::move(a) * Expr::number(b); }
Expr operator/(Expr a, double b) { return std::move(a) / Expr::number(b); }
Expr operator+(double a, Expr b) { return Expr::number(a) + std::move(b); }
Expr operator-(double a, Expr b) { return Expr::number(a) - std::move(b); }
Expr operator*(double a, Expr b) { return Expr::number(a) * std::move(b); }
Expr operator/(double a, Expr b) { return Expr::number(a) / std::move(b); }

namespace fn {
Expr exp(Expr x) { return Expr::unary(ExprKind::exp, std::move(x)); }
Expr ln(Expr x) { return Expr::unary(ExprKind::ln, std::move(x)); }
Expr step(Expr x) { return Expr::unary(ExprKind::step, std::move(x)); }
Expr delay(Expr inner, Expr by) { return Expr::binary(ExprKind::delay, std::move(inner), std::move(by)); }
Expr histint(Expr inner, Expr over) {
  return Expr::binary(ExprKind::histint, std::move(inner), std::move(over));
}
}  // namespace fn

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// Binding strength used by the printer: higher binds tighter.
int precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::add:
    case ExprKind::sub:
      return 1;
    case ExprKind::mul:
    case ExprKind::div:
      return 2;
    case ExprKind::negate:
      return 3;
    case ExprKind::number:
      // A negative literal prints with a leading minus, so it behaves like a unary.
      return std::signbit(e.value()) ? 3 : 4;
    default:
      return 4;
  }
}

const char* call_name(ExprKind k) {
  switch (k) {
    case ExprKind::exp: return "exp";
    case ExprKind::ln: return "ln";
    case ExprKind::step: return "step";
    case ExprKind::delay: return "delay";
    case ExprKind::histint: return "histint";
    default: return "?";
  }
}

void print(const Expr& e, std::string& out);

void print_operand(const Expr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprKind::number:
      out += format_number(e.value());
      return;
    case ExprKind::identifier:
      out += e.name();
      return;
    case ExprKind::negate: {
      out += '-';
      const Expr& a = e.arg(0);
      // "-5" would re-parse as a negative literal; keep the negation explicit.
      if (a.is_number() && !std::signbit(a.value())) {
        out += '(';
        print(a, out);
        out += ')';
      } else {
        print_operand(a, 3, out);
      }
      return;
    }
    case ExprKind::add:
    case ExprKind::sub:
    case ExprKind::mul:
    case ExprKind::div: {
      int p = precedence(e);
      print_operand(e.arg(0), p, out);
      switch (e.kind()) {
        case ExprKind::add: out += " + "; break;
        case ExprKind::sub: out += " - "; break;
        case ExprKind::mul: out += " * "; break;
        default: out += " / "; break;
      }
      // Operators are left-associative: an equal-precedence right child needs parens.
      print_operand(e.arg(1), p + 1, out);
      return;
    }
    default:
      out += call_name(e.kind());
      out += '(';
      for (std::size_t i = 0; i < e.arity(); ++i) {
        if (i) out += ", ";
        print(e.arg(i), out);
      }
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

void collect_identifiers(const Expr& e, std::vector<Expr>& out) {
  if (e.is_identifier()) {
    out.push_back(e);
    return;
  }
  for (std::size_t i = 0; i < e.arity(); ++i) collect_identifiers(e.arg(i), out);
}

bool contains_history(const Expr& e) {
  if (e.kind() == ExprKind::delay || e.kind() == ExprKind::histint) return true;
  for (std::size_t i = 0; i < e.arity(); ++i) {
    if (contains_history(e.arg(i))) return true;
  }
  return false;
}

bool references(const Expr& e, const std::string& name) {
  if (e.is_identifier()) return e.name() == name;
  for (std::size_t i = 0; i < e.arity(); ++i) {
    if (references(e.arg(i), name)) return true;
  }
  return false;
}

SampledHistory::SampledHistory(std::vector<double> times,
                               std::map<std::string, std::vector<double>> series)
    : times_(std::move(times)), series_(std::move(series)) {
  if (times_.empty()) throw ModelError("history needs at least one sample");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw ModelError("history times must be strictly increasing");
  }
  for (const auto& [name, values] : series_) {
    if (values.size() != times_.size()) throw ModelError("history series '" + name + "' has wrong length");
  }
}

Bindings SampledHistory::at(double t) const {
  Bindings b;
  const double tol = 1e-12 * std::max(1.0, std::abs(times_.back()));
  if (t > times_.back() + tol) {
    throw NumericError(NumericErrorKind::missing_history, "history queried after its last sample", t);
  }
  if (t <= times_.front()) {
    for (const auto& [name, v] : series_) b[name] = v.front();
    return b;
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.end()) {
    for (const auto& [name, v] : series_) b[name] = v.back();
    return b;
  }
  std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  std::size_t lo = hi - 1;
  double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
  for (const auto& [name, v] : series_) b[name] = v[lo] + w * (v[hi] - v[lo]);
  return b;
}

std::vector<double> SampledHistory::interior_times(double from, double to) const {
  std::vector<double> out;
  for (double s : times_) {
    if (s > from && s < to) out.push_back(s);
  }
  return out;
}

namespace {

double eval_at(const Expr& e, const Bindings& b, const SampledHistory* h);

double bound_time(const Bindings& b) {
  auto it = b.find("t");
  if (it == b.end()) throw ModelError("history terms need 't' to be bound");
  return it->second;
}

Bindings shifted(const Bindings& base, const SampledHistory& h, double t) {
  Bindings b = base;
  for (const auto& [name, v] : h.at(t)) b[name] = v;
  b["t"] = t;
  return b;
}

double eval_at(const Expr& e, const Bindings& b, const SampledHistory* h) {
  switch (e.kind()) {
    case ExprKind::number:
      return e.value();
    case ExprKind::identifier: {
      auto it = b.find(e.name());
      if (it == b.end()) throw ModelError("unbound identifier " + e.name(), e.loc());
      return it->second;
    }
    case ExprKind::negate:
      return -eval_at(e.arg(0), b, h);
    case ExprKind::add:
      return eval_at(e.arg(0), b, h) + eval_at(e.arg(1), b, h);
    case ExprKind::sub:
      return eval_at(e.arg(0), b, h) - eval_at(e.arg(1), b, h);
    case ExprKind::mul:
      return eval_at(e.arg(0), b, h) * eval_at(e.arg(1), b, h);
    case ExprKind::div: {
      double den = eval_at(e.arg(1), b, h);
      if (den == 0.0) throw NumericError(NumericErrorKind::division_by_zero, "division by zero in " + to_string(e));
      return eval_at(e.arg(0), b, h) / den;
    }
    case ExprKind::exp:
      return std::exp(eval_at(e.arg(0), b, h));
    case ExprKind::ln:
      return std::log(eval_at(e.arg(0), b, h));
    case ExprKind::step:
      return eval_at(e.arg(0), b, h) < 0.0 ? 0.0 : 1.0;
    case ExprKind::delay: {
      if (!h) throw NumericError(NumericErrorKind::missing_history, "delay() needs a history");
      double by = eval_at(e.arg(1), b, nullptr);
      double t = bound_time(b);
      return eval_at(e.arg(0), shifted(b, *h, t - by), nullptr);
    }
    case ExprKind::histint: {
      if (!h) throw NumericError(NumericErrorKind::missing_history, "histint() needs a history");
      double over = eval_at(e.arg(1), b, nullptr);
      double t = bound_time(b);
      std::vector<double> pts{t - over};
      for (double s : h->interior_times(t - over, t)) pts.push_back(s);
      pts.push_back(t);
      double sum = 0.0;
      double prev = eval_at(e.arg(0), shifted(b, *h, pts[0]), nullptr);
      for (std::size_t i = 1; i < pts.size(); ++i) {
        double cur = eval_at(e.arg(0), shifted(b, *h, pts[i]), nullptr);
        sum += 0.5 * (pts[i] - pts[i - 1]) * (prev + cur);
        prev = cur;
      }
      return sum;
    }
  }
  return 0.0;
}

}  // namespace

double eval_expr(const Expr& e, const Bindings& bindings, const SampledHistory* history) {
  return eval_at(e, bindings, history);
}

}  // namespace swarmk
