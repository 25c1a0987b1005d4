#include "swarmk/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <set>

#include "swarmk/errors.hpp"

namespace swarmk {

TransitionKind Transition::kind() const {
  if (contains_history(rate)) return TransitionKind::delayed;
  for (const auto& e : effects) {
    if (contains_history(e.amount)) return TransitionKind::delayed;
  }
  return TransitionKind::memoryless;
}

namespace {

const Declaration* find_in(const std::vector<Declaration>& v, const std::string& n) {
  for (const auto& d : v) {
    if (d.name == n) return &d;
  }
  return nullptr;
}

}  // namespace

const Declaration* StateDiagram::find_param(const std::string& n) const { return find_in(params, n); }
const Declaration* StateDiagram::find_state(const std::string& n) const { return find_in(states, n); }
const Declaration* StateDiagram::find_env(const std::string& n) const { return find_in(envs, n); }

bool is_reserved_word(const std::string& name) {
  static const std::set<std::string> words{"param", "state", "env",     "rate", "exp", "ln",
                                           "step",  "delay", "histint", "t",    "N0"};
  return words.count(name) > 0;
}

std::map<std::string, double> resolve_params(const StateDiagram& d) {
  std::map<std::string, double> values;
  std::map<std::string, int> mark;  // 1 = in progress, 2 = done
  std::function<double(const Declaration&)> resolve = [&](const Declaration& p) -> double {
    if (mark[p.name] == 2) return values[p.name];
    if (mark[p.name] == 1) throw ModelError("cyclic parameter definition involving " + p.name, p.loc);
    mark[p.name] = 1;
    std::vector<Expr> ids;
    collect_identifiers(p.value, ids);
    Bindings b;
    for (const auto& id : ids) {
      const Declaration* dep = d.find_param(id.name());
      if (!dep) throw ModelError("unknown identifier " + id.name() + " in parameter " + p.name, id.loc());
      b[id.name()] = resolve(*dep);
    }
    double v = eval_expr(p.value, b);
    values[p.name] = v;
    mark[p.name] = 2;
    return v;
  };
  for (const auto& p : d.params) resolve(p);
  return values;
}

namespace {

double eval_with_params(const Expr& e, const std::map<std::string, double>& params) {
  Bindings b(params.begin(), params.end());
  return eval_expr(e, b);
}

}  // namespace

std::vector<double> initial_values(const StateDiagram& d) {
  auto params = resolve_params(d);
  std::vector<double> out;
  out.reserve(d.states.size() + d.envs.size());
  for (const auto& s : d.states) out.push_back(eval_with_params(s.value, params));
  for (const auto& e : d.envs) out.push_back(eval_with_params(e.value, params));
  return out;
}

StateDiagram with_overrides(const StateDiagram& d, const std::map<std::string, double>& overrides) {
  StateDiagram out = d;
  for (const auto& [name, value] : overrides) {
    auto it = std::find_if(out.params.begin(), out.params.end(), [&](const Declaration& p) { return p.name == name; });
    if (it == out.params.end()) throw ModelError("unknown parameter " + name + " in override");
    it->value = Expr::number(value, it->loc);
  }
  return out;
}

ConservedTotal conserved_total(const StateDiagram& d) {
  ConservedTotal out;
  auto init = initial_values(d);
  double sum = 0.0;
  for (std::size_t i = 0; i < d.states.size(); ++i) {
    sum += init[i];
    out.states.push_back(d.states[i].name);
  }
  out.total = d.declared_total.value_or(sum);
  return out;
}

namespace {

enum class Scope { params_only, rate };

// Replaces history terms by their constant-history values so a rate can be
// sampled without an integrator: delay(x, by) -> x, histint(x, over) -> over * x.
Expr without_history(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::number:
    case ExprKind::identifier:
      return e;
    case ExprKind::delay:
      return without_history(e.arg(0));
    case ExprKind::histint:
      return e.arg(1) * without_history(e.arg(0));
    default:
      break;
  }
  if (e.arity() == 1) return Expr::unary(e.kind(), without_history(e.arg(0)), e.loc());
  return Expr::binary(e.kind(), without_history(e.arg(0)), without_history(e.arg(1)), e.loc());
}

class Validator {
 public:
  explicit Validator(const StateDiagram& d) : d_(d) {}

  ValidationReport run() {
    check_names();
    check_params();
    check_initials();
    check_transitions();
    if (report_.ok()) sample_rates();
    return std::move(report_);
  }

 private:
  void defect(std::string msg, SourceLoc loc) { report_.defects.push_back({std::move(msg), loc}); }
  void warning(std::string msg, SourceLoc loc) { report_.warnings.push_back({std::move(msg), loc}); }

  void check_names() {
    std::set<std::string> seen;
    auto visit = [&](const std::vector<Declaration>& v, const char* what) {
      for (const auto& x : v) {
        if (is_reserved_word(x.name)) defect(std::string(what) + " name " + x.name + " is a reserved word", x.loc);
        if (!seen.insert(x.name).second) defect("duplicate name " + x.name, x.loc);
      }
    };
    visit(d_.params, "parameter");
    visit(d_.states, "state");
    visit(d_.envs, "environment");
  }

  void check_identifiers(const Expr& e, Scope scope, bool inside_history = false) {
    switch (e.kind()) {
      case ExprKind::identifier: {
        const std::string& n = e.name();
        bool known = d_.find_param(n) != nullptr;
        if (scope == Scope::rate) {
          known = known || d_.find_state(n) || d_.find_env(n) || n == "t" || n == "N0";
        }
        if (!known) {
          bool exists = d_.find_state(n) || d_.find_env(n) || n == "t" || n == "N0";
          if (exists) {
            defect(n + " cannot be used here (only parameters are allowed)", e.loc());
          } else {
            defect("unknown identifier " + n, e.loc());
          }
        }
        return;
      }
      case ExprKind::delay:
      case ExprKind::histint: {
        if (scope != Scope::rate) {
          defect("history terms are only allowed in rates", e.loc());
          return;
        }
        if (inside_history) defect("nested delay/histint is not supported", e.loc());
        check_identifiers(e.arg(0), scope, true);
        std::vector<Expr> ids;
        collect_identifiers(e.arg(1), ids);
        bool constant = !contains_history(e.arg(1));
        for (const auto& id : ids) {
          if (!d_.find_param(id.name())) {
            constant = false;
            if (!d_.find_state(id.name()) && !d_.find_env(id.name()) && id.name() != "t" && id.name() != "N0") {
              defect("unknown identifier " + id.name(), id.loc());
            }
          }
        }
        if (!constant) {
          defect("delay bound must be a constant expression of parameters", e.arg(1).loc().known() ? e.arg(1).loc() : e.loc());
        } else if (params_ok_) {
          try {
            double by = eval_with_params(e.arg(1), params_);
            if (!(by >= 0.0) || !std::isfinite(by)) defect("delay bound must be finite and non-negative", e.loc());
          } catch (const std::exception& ex) {
            defect(ex.what(), e.loc());
          }
        }
        return;
      }
      default:
        for (std::size_t i = 0; i < e.arity(); ++i) check_identifiers(e.arg(i), scope, inside_history);
    }
  }

  void check_params() {
    for (const auto& p : d_.params) check_identifiers(p.value, Scope::params_only);
    if (!report_.ok()) return;
    try {
      params_ = resolve_params(d_);
      params_ok_ = true;
    } catch (const std::exception& ex) {
      defect(ex.what(), {});
    }
  }

  void check_initials() {
    double sum = 0.0;
    bool all = true;
    auto visit = [&](const std::vector<Declaration>& v, bool is_state) {
      for (const auto& x : v) {
        std::size_t before = report_.defects.size();
        check_identifiers(x.value, Scope::params_only);
        if (report_.defects.size() != before || !params_ok_) {
          all = false;
          continue;
        }
        double val = 0.0;
        try {
          val = eval_with_params(x.value, params_);
        } catch (const std::exception& ex) {
          defect(ex.what(), x.loc);
          all = false;
          continue;
        }
        if (!std::isfinite(val)) {
          defect("initial value of " + x.name + " is not finite", x.loc);
          all = false;
        } else if (is_state && val < 0.0) {
          defect("negative initial count for state " + x.name, x.loc);
        }
        if (is_state) sum += val;
      }
    };
    visit(d_.states, true);
    visit(d_.envs, false);
    if (d_.states.empty()) defect("diagram has no states", {});
    if (all && d_.declared_total) {
      double n0 = *d_.declared_total;
      if (std::abs(sum - n0) > 1e-9 * std::max(1.0, std::abs(n0))) {
        defect("conservation mismatch: initial states sum to " + format_number(sum) + " but N0 = " + format_number(n0), {});
      }
    }
  }

  void check_transitions() {
    for (const auto& tr : d_.transitions) {
      if (!d_.find_state(tr.source)) defect("unknown source state " + tr.source, tr.loc);
      if (!d_.find_state(tr.target)) defect("unknown target state " + tr.target, tr.loc);
      check_identifiers(tr.rate, Scope::rate);
      for (const auto& eff : tr.effects) {
        if (!d_.find_env(eff.env)) defect("effect target " + eff.env + " is not an environment counter", eff.loc);
        check_identifiers(eff.amount, Scope::rate);
      }
    }
  }

  // Evaluates each rate at the initial point, the origin and random points with
  // states in [0, N0] and counters in [0, max(1, 2 * initial)].
  void sample_rates() {
    auto init = initial_values(d_);
    double n0 = conserved_total(d_).total;
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> points{init, std::vector<double>(init.size(), 0.0)};
    for (int k = 0; k < 64; ++k) {
      std::vector<double> p(init.size());
      for (std::size_t i = 0; i < init.size(); ++i) {
        double hi = i < d_.states.size() ? n0 : std::max(1.0, 2.0 * std::abs(init[i]));
        p[i] = hi * unit(rng);
      }
      points.push_back(std::move(p));
    }
    for (const auto& tr : d_.transitions) {
      Expr rate = without_history(tr.rate);
      bool flagged_neg = false;
      for (const auto& p : points) {
        Bindings b(params_.begin(), params_.end());
        for (std::size_t i = 0; i < d_.states.size(); ++i) b[d_.states[i].name] = p[i];
        for (std::size_t i = 0; i < d_.envs.size(); ++i) b[d_.envs[i].name] = p[d_.states.size() + i];
        b["t"] = 0.0;
        b["N0"] = n0;
        double v = 0.0;
        try {
          v = eval_expr(rate, b);
        } catch (const std::exception& ex) {
          defect(std::string("rate ") + tr.source + " -> " + tr.target + ": " + ex.what(), tr.loc);
          break;
        }
        if (!std::isfinite(v)) {
          defect("rate " + tr.source + " -> " + tr.target + " is not finite at a sampled point", tr.loc);
          break;
        }
        if (v < 0.0 && !flagged_neg) {
          warning("rate " + tr.source + " -> " + tr.target + " is negative at a sampled point", tr.loc);
          flagged_neg = true;
        }
      }
    }
  }

  const StateDiagram& d_;
  ValidationReport report_;
  std::map<std::string, double> params_;
  bool params_ok_ = false;
};

}  // namespace

ValidationReport validate_diagram(const StateDiagram& d) { return Validator(d).run(); }

std::string to_source(const StateDiagram& d) {
  std::string out;
  for (const auto& p : d.params) out += "param " + p.name + " = " + to_string(p.value) + "\n";
  for (const auto& s : d.states) out += "state " + s.name + " = " + to_string(s.value) + "\n";
  for (const auto& e : d.envs) out += "env " + e.name + " = " + to_string(e.value) + "\n";
  for (const auto& tr : d.transitions) {
    out += "rate(" + to_string(tr.rate) + ") : " + tr.source + " -> " + tr.target;
    for (std::size_t i = 0; i < tr.effects.size(); ++i) {
      const auto& eff = tr.effects[i];
      out += i == 0 ? " ; " : ", ";
      out += eff.env + (eff.subtract ? " -= " : " += ") + to_string(eff.amount);
    }
    out += "\n";
  }
  return out;
}

namespace {

bool same_decls(const std::vector<Declaration>& a, const std::vector<Declaration>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].value != b[i].value) return false;
  }
  return true;
}

}  // namespace

bool structurally_equal(const StateDiagram& a, const StateDiagram& b) {
  if (!same_decls(a.params, b.params) || !same_decls(a.states, b.states) || !same_decls(a.envs, b.envs)) return false;
  if (a.declared_total != b.declared_total) return false;
  if (a.transitions.size() != b.transitions.size()) return false;
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    const auto& x = a.transitions[i];
    const auto& y = b.transitions[i];
    if (x.source != y.source || x.target != y.target || x.rate != y.rate) return false;
    if (x.effects.size() != y.effects.size()) return false;
    for (std::size_t k = 0; k < x.effects.size(); ++k) {
      if (x.effects[k].env != y.effects[k].env || x.effects[k].subtract != y.effects[k].subtract ||
          x.effects[k].amount != y.effects[k].amount) {
        return false;
      }
    }
  }
  return true;
}

bool same_topology(const StateDiagram& a, const StateDiagram& b) {
  if (a.states.size() != b.states.size()) return false;
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    if (a.states[i].name != b.states[i].name) return false;
  }
  std::multiset<std::pair<std::string, std::string>> ea, eb;
  for (const auto& t : a.transitions) ea.emplace(t.source, t.target);
  for (const auto& t : b.transitions) eb.emplace(t.source, t.target);
  return ea == eb;
}

double encounter_rate(double speed, double detection_width, double arena_radius) {
  if (!(speed > 0.0) || !(detection_width > 0.0) || !(arena_radius > 0.0)) {
    throw std::domain_error("encounter_rate: speed, detection width and radius must be positive");
  }
  return speed * detection_width / (std::numbers::pi * arena_radius * arena_radius);
}

}  // namespace swarmk
