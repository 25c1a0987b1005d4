#include "swarmk/rate_system.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace swarmk {

const char* to_string(Flavor f) {
  switch (f) {
    case Flavor::ode: return "ode";
    case Flavor::dde: return "dde";
    case Flavor::difference: return "difference";
  }
  return "?";
}

struct RateSystemBuilder {
  using Op = RateSystem::Op;
  using Program = RateSystem::Program;

  const StateDiagram& d;
  RateSystem& rs;
  std::map<std::string, std::size_t> slots;

  void emit(Program& p, Op op, std::uint32_t index = 0, double value = 0.0) { p.code.push_back({op, index, value}); }

  // Windows of delay/histint are parameter-only expressions.
  double window(const Expr& e) {
    Bindings b(rs.params_.begin(), rs.params_.end());
    double v = eval_expr(e, b);
    if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError("history window must be a finite non-negative constant", e.loc());
    return v;
  }

  // Returns the stack depth needed by the emitted code.
  std::size_t gen(Program& p, const Expr& e, bool in_history) {
    switch (e.kind()) {
      case ExprKind::number:
        emit(p, Op::konst, 0, e.value());
        return 1;
      case ExprKind::identifier: {
        const std::string& n = e.name();
        if (auto it = slots.find(n); it != slots.end()) {
          emit(p, Op::slot, static_cast<std::uint32_t>(it->second));
        } else if (auto pit = rs.params_.find(n); pit != rs.params_.end()) {
          emit(p, Op::konst, 0, pit->second);
        } else if (n == "t") {
          rs.uses_time_ = true;
          emit(p, Op::time);
        } else if (n == "N0") {
          emit(p, Op::konst, 0, rs.total_);
        } else {
          throw ModelError("unknown identifier " + n, e.loc());
        }
        return 1;
      }
      case ExprKind::negate:
      case ExprKind::exp:
      case ExprKind::ln:
      case ExprKind::step: {
        std::size_t dep = gen(p, e.arg(0), in_history);
        Op op = e.kind() == ExprKind::negate ? Op::neg : e.kind() == ExprKind::exp ? Op::exp : e.kind() == ExprKind::ln ? Op::ln : Op::step;
        emit(p, op);
        return dep;
      }
      case ExprKind::add:
      case ExprKind::sub:
      case ExprKind::mul:
      case ExprKind::div: {
        std::size_t a = gen(p, e.arg(0), in_history);
        std::size_t b = gen(p, e.arg(1), in_history);
        static const std::map<ExprKind, Op> ops{{ExprKind::add, Op::add}, {ExprKind::sub, Op::sub}, {ExprKind::mul, Op::mul}, {ExprKind::div, Op::div}};
        emit(p, ops.at(e.kind()));
        return std::max(a, b + 1);
      }
      case ExprKind::delay: {
        if (in_history) throw ModelError("nested delay/histint is not supported", e.loc());
        Program inner;
        inner.depth = gen(inner, e.arg(0), true);
        double by = window(e.arg(1));
        rs.has_history_ = rs.has_history_ || by > 0.0;
        rs.delayed_.push_back(std::move(inner));
        rs.delay_by_.push_back(by);
        emit(p, Op::delay, static_cast<std::uint32_t>(rs.delayed_.size() - 1), by);
        return 1;
      }
      case ExprKind::histint: {
        if (in_history) throw ModelError("nested delay/histint is not supported", e.loc());
        double over = window(e.arg(1));
        rs.has_history_ = rs.has_history_ || over > 0.0;
        // Identical integrals share one slot so the integrator stores them once.
        std::size_t slot = 0;
        for (; slot < hist_exprs.size(); ++slot) {
          if (hist_exprs[slot] == e.arg(0) && rs.histints_[slot].over == over) break;
        }
        if (slot == hist_exprs.size()) {
          Program inner;
          inner.depth = gen(inner, e.arg(0), true);
          rs.histints_.push_back({std::move(inner), over});
          hist_exprs.push_back(e.arg(0));
        }
        emit(p, Op::histint, static_cast<std::uint32_t>(slot), over);
        return 1;
      }
    }
    throw ModelError("unsupported expression");
  }

  Program program(const Expr& e) {
    Program p;
    p.depth = gen(p, e, false);
    return p;
  }

  std::vector<Expr> hist_exprs;

  void build(const CompileOptions& opts) {
    rs.model_name_ = d.name;
    rs.params_ = resolve_params(d);
    rs.initial_ = initial_values(d);
    rs.n_states_ = d.states.size();
    rs.total_ = conserved_total(d).total;
    for (const auto& s : d.states) rs.names_.push_back(s.name);
    for (const auto& e : d.envs) rs.names_.push_back(e.name);
    for (std::size_t i = 0; i < rs.names_.size(); ++i) slots[rs.names_[i]] = i;

    rs.terms_.assign(rs.n_states_, {});
    for (const auto& tr : d.transitions) {
      auto src = slots.find(tr.source);
      auto dst = slots.find(tr.target);
      if (src == slots.end() || src->second >= rs.n_states_) throw ModelError("unknown state " + tr.source, tr.loc);
      if (dst == slots.end() || dst->second >= rs.n_states_) throw ModelError("unknown state " + tr.target, tr.loc);
      RateSystem::Channel ch{src->second, dst->second, program(tr.rate), {}};
      for (const auto& eff : tr.effects) {
        auto es = slots.find(eff.env);
        if (es == slots.end() || es->second < rs.n_states_) throw ModelError(eff.env + " is not an environment counter", eff.loc);
        Program amount;
        amount.depth = gen(amount, eff.amount, false);
        ch.effects.push_back({es->second, eff.subtract ? -1.0 : 1.0, std::move(amount)});
      }
      std::size_t j = rs.channels_.size();
      if (ch.source != ch.target) {
        rs.terms_[ch.source].emplace_back(j, -1.0);
        rs.terms_[ch.target].emplace_back(j, 1.0);
      }
      rs.channels_.push_back(std::move(ch));
    }

    Flavor natural = rs.has_history_ ? Flavor::dde : Flavor::ode;
    rs.flavor_ = opts.flavor.value_or(natural);
    if (rs.flavor_ == Flavor::ode && rs.has_history_) {
      throw ModelError("model " + d.name + " reads history; it cannot be compiled as an ode");
    }
    if (rs.flavor_ == Flavor::difference) {
      if (!(opts.step > 0.0) || !std::isfinite(opts.step)) throw ModelError("difference step must be positive");
      rs.step_ = opts.step;
    }
  }
};

RateSystem compile_rhs(const StateDiagram& d, const CompileOptions& opts) {
  RateSystem rs;
  RateSystemBuilder b{d, rs, {}, {}};
  b.build(opts);
  return rs;
}

std::optional<std::size_t> RateSystem::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

double RateSystem::max_delay() const {
  auto ds = delays();
  return ds.empty() ? 0.0 : ds.back();
}

std::vector<double> RateSystem::delays() const {
  std::set<double> s;
  for (double by : delay_by_)
    if (by > 0.0) s.insert(by);
  for (const auto& h : histints_)
    if (h.over > 0.0) s.insert(h.over);
  return {s.begin(), s.end()};
}

double RateSystem::run(const Program& p, double t, const double* y, const HistoryAccessor* h) const {
  double small[32] = {};
  std::vector<double> big;
  double* st = small;
  if (p.depth > 32) {
    big.resize(p.depth);
    st = big.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : p.code) {
    switch (in.op) {
      case Op::konst: st[sp++] = in.value; break;
      case Op::slot: st[sp++] = y[in.index]; break;
      case Op::time: st[sp++] = t; break;
      case Op::neg: st[sp - 1] = -st[sp - 1]; break;
      case Op::add: --sp; st[sp - 1] += st[sp]; break;
      case Op::sub: --sp; st[sp - 1] -= st[sp]; break;
      case Op::mul: --sp; st[sp - 1] *= st[sp]; break;
      case Op::div:
        --sp;
        if (st[sp] == 0.0) throw NumericError(NumericErrorKind::division_by_zero, "division by zero in rate expression", t);
        st[sp - 1] /= st[sp];
        break;
      case Op::exp: st[sp - 1] = std::exp(st[sp - 1]); break;
      case Op::ln: st[sp - 1] = std::log(st[sp - 1]); break;
      case Op::step: st[sp - 1] = st[sp - 1] < 0.0 ? 0.0 : 1.0; break;
      case Op::delay: {
        const Program& inner = delayed_[in.index];
        if (in.value == 0.0) {
          st[sp++] = run(inner, t, y, nullptr);
          break;
        }
        if (!h) throw NumericError(NumericErrorKind::missing_history, "delay term evaluated without history", t);
        std::vector<double> past(dimension());
        h->state_at(t - in.value, past.data());
        st[sp++] = run(inner, t - in.value, past.data(), nullptr);
        break;
      }
      case Op::histint: {
        if (in.value == 0.0) {
          st[sp++] = 0.0;
          break;
        }
        if (!h) throw NumericError(NumericErrorKind::missing_history, "histint term evaluated without history", t);
        double cur = run(histints_[in.index].inner, t, y, nullptr);
        st[sp++] = h->integral(in.index, t - in.value, t, cur);
        break;
      }
    }
  }
  return st[0];
}

void RateSystem::flows(double t, const double* y, const HistoryAccessor* h, double* out) const {
  for (std::size_t j = 0; j < channels_.size(); ++j) out[j] = run(channels_[j].rate, t, y, h);
}

void RateSystem::derivative(double t, const double* y, const HistoryAccessor* h, double* dy) const {
  std::fill(dy, dy + dimension(), 0.0);
  for (const auto& ch : channels_) {
    double f = run(ch.rate, t, y, h);
    if (ch.source != ch.target) {
      dy[ch.source] -= f;
      dy[ch.target] += f;
    }
    for (const auto& eff : ch.effects) dy[eff.slot] += eff.sign * run(eff.amount, t, y, h) * f;
  }
}

std::vector<double> RateSystem::derivative(double t, const std::vector<double>& y, const HistoryAccessor* h) const {
  if (y.size() != dimension()) throw ModelError("value vector has wrong dimension");
  std::vector<double> dy(dimension());
  derivative(t, y.data(), h, dy.data());
  return dy;
}

void RateSystem::jump(std::size_t j, double t, const double* y, double* delta) const {
  const Channel& ch = channels_.at(j);
  std::fill(delta, delta + dimension(), 0.0);
  if (ch.source != ch.target) {
    delta[ch.source] -= 1.0;
    delta[ch.target] += 1.0;
  }
  for (const auto& eff : ch.effects) delta[eff.slot] += eff.sign * run(eff.amount, t, y, nullptr);
}

void RateSystem::histint_integrands(double t, const double* y, double* out) const {
  for (std::size_t i = 0; i < histints_.size(); ++i) out[i] = run(histints_[i].inner, t, y, nullptr);
}

std::size_t RateSystem::terms_for_state(std::size_t k) const { return terms_.at(k).size(); }

}  // namespace swarmk
