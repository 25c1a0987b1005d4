#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace swarmk {

/// Position inside a model source. Line and column are 1-based; 0 means unknown.
struct SourceLoc {
  int line = 0;
  int column = 0;

  bool known() const { return line > 0; }
};

enum class ExprKind {
  number,
  identifier,
  negate,
  add,
  sub,
  mul,
  div,
  exp,
  ln,
  step,
  delay,    // delay(inner, by): inner evaluated at t - by
  histint,  // histint(inner, over): integral of inner over [t - over, t]
};

/// Immutable expression tree node handle. Copies share structure.
///
/// Structural equality (operator==) compares kinds, literal bits, identifier
/// names and children; source locations are ignored.
class Expr {
 public:
  Expr();  // the literal 0

  static Expr number(double value, SourceLoc loc = {});
  static Expr ident(std::string name, SourceLoc loc = {});
  static Expr unary(ExprKind kind, Expr arg, SourceLoc loc = {});
  static Expr binary(ExprKind kind, Expr lhs, Expr rhs, SourceLoc loc = {});

  ExprKind kind() const;
  double value() const;
  const std::string& name() const;
  std::size_t arity() const;
  const Expr& arg(std::size_t i) const;
  SourceLoc loc() const;

  bool is_number() const { return kind() == ExprKind::number; }
  bool is_identifier() const { return kind() == ExprKind::identifier; }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);

Expr operator+(Expr a, double b);
Expr operator-(Expr a, double b);
Expr operator*(Expr a, double b);
Expr operator/(Expr a, double b);
Expr operator+(double a, Expr b);
Expr operator-(double a, Expr b);
Expr operator*(double a, Expr b);
Expr operator/(double a, Expr b);

/// Builders for the call forms of the model language.
namespace fn {
Expr exp(Expr x);
Expr ln(Expr x);
Expr step(Expr x);
Expr delay(Expr inner, Expr by);
Expr histint(Expr inner, Expr over);
}  // namespace fn

/// Shorthand for identifiers in model builders.
inline Expr var(std::string name) { return Expr::ident(std::move(name)); }

/// Renders an expression in model-language syntax with the minimal
/// parenthesization that re-parses to a structurally identical tree.
std::string to_string(const Expr& e);

/// Formats a number with 17 significant digits (round-trip exact).
std::string format_number(double v);

/// Visits every identifier in e (including inside delay/histint).
void collect_identifiers(const Expr& e, std::vector<Expr>& out);

bool contains_history(const Expr& e);
bool references(const Expr& e, const std::string& name);

using Bindings = std::map<std::string, double>;

/// Name-based history used by eval_expr for delay/histint terms.
///
/// Values before the first sample equal the first sample (constant
/// pre-history); queries after the last sample are errors.
class SampledHistory {
 public:
  SampledHistory(std::vector<double> times, std::map<std::string, std::vector<double>> series);

  /// Linearly interpolated bindings at time t.
  Bindings at(double t) const;
  /// Sample times strictly inside (from, to).
  std::vector<double> interior_times(double from, double to) const;

 private:
  std::vector<double> times_;
  std::map<std::string, std::vector<double>> series_;
};

/// Evaluates e under the given bindings. `t` must be bound when history is
/// used. Throws ModelError for unbound identifiers and NumericError on
/// division by zero or a missing history.
double eval_expr(const Expr& e, const Bindings& bindings, const SampledHistory* history = nullptr);

}  // namespace swarmk
