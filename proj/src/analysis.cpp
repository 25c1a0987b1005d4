#include "swarmk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "swarmk/errors.hpp"
#include "swarmk/parallel.hpp"

namespace swarmk {

const char* to_string(Branch b) { return b == Branch::unique ? "unique" : "boundary"; }

double simple_steady_equation(double n, double beta, double gamma, double rg) {
  double a = beta * (1.0 + rg);
  return a * n * n + (1.0 + gamma - a) * n - gamma;
}

SteadyStateResult steady_state_simple(double beta, double gamma, double rg) {
  if (!(beta > 0.0) || !(gamma >= 0.0) || !(rg >= 0.0)) throw std::domain_error("steady_state_simple: need beta > 0, gamma >= 0, rg >= 0");
  double a = beta * (1.0 + rg);
  double b = 1.0 + gamma - a;
  double disc = std::sqrt(b * b + 4.0 * a * gamma);
  // Cancellation-free form of the positive root.
  double n = b >= 0.0 ? 2.0 * gamma / (b + disc) : (-b + disc) / (2.0 * a);
  n = std::clamp(n, 0.0, 1.0);
  SteadyStateResult r;
  r.n = n;
  r.branch = (n == 0.0 || n == 1.0) ? Branch::boundary : Branch::unique;
  r.residual = std::fabs(simple_steady_equation(n, beta, gamma, rg));
  return r;
}

double delayed_steady_equation(double n, double beta, double tau, double rg) {
  double bt = rg * beta;
  return -1.0 + (beta + bt) * (1.0 - n) + (1.0 - beta * (1.0 - n)) * std::exp(-bt * tau * n);
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    std::ostringstream os;
    os << "no sign change: f(" << lo << ")=" << flo << ", f(" << hi << ")=" << fhi;
    throw NumericError(NumericErrorKind::no_root, os.str());
  }
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SteadyStateResult steady_state_delayed(double beta, double tau, double rg) {
  if (!(beta > 0.0) || !(tau >= 0.0) || !(rg >= 0.0)) throw std::domain_error("steady_state_delayed: need beta > 0, tau >= 0, rg >= 0");
  SteadyStateResult r;
  if (tau == 0.0) {
    r.n = 1.0;
    r.branch = Branch::boundary;
    r.residual = std::fabs(delayed_steady_equation(1.0, beta, tau, rg));
    return r;
  }
  auto f = [&](double n) { return delayed_steady_equation(n, beta, tau, rg); };
  double f0 = f(0.0);
  double f1 = f(1.0);
  if ((f0 > 0.0) == (f1 > 0.0) && f0 != 0.0 && f1 != 0.0) {
    std::ostringstream os;
    os << "steady state equation has no sign change on [0,1]: f(0)=" << f0 << ", f(1)=" << f1;
    throw NumericError(NumericErrorKind::no_root, os.str());
  }
  double lo = 0.0;
  double hi = 1.0;
  double flo = f0;
  while (hi - lo > 1e-6) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double bt = rg * beta;
  double n = 0.5 * (lo + hi);
  for (int it = 0; it < 20; ++it) {
    double e = std::exp(-bt * tau * n);
    double fn = f(n);
    if (fn == 0.0) break;
    double df = -(beta + bt) + beta * e - (1.0 - beta * (1.0 - n)) * bt * tau * e;
    double next = n - fn / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if ((f(next) > 0.0) == (flo > 0.0)) lo = next; else hi = next;
    if (std::fabs(next - n) < 1e-16) {
      n = next;
      break;
    }
    n = next;
  }
  r.n = n;
  r.branch = (n <= 0.0 || n >= 1.0) ? Branch::boundary : Branch::unique;
  r.residual = std::fabs(f(n));
  return r;
}

double collaboration_rate(double n, double beta, double rg) { return beta * rg * beta * n * (1.0 - n); }

double beta_critical(double rg) {
  if (!(rg > 0.0)) throw std::domain_error("beta_critical: rg must be positive");
  return 2.0 / (1.0 + rg);
}

std::optional<double> gamma_opt(double beta, double rg) {
  double v = 1.0 - beta * (1.0 + rg) / 2.0;
  if (v < -1e-12) return std::nullopt;
  return std::max(v, 0.0);
}

std::optional<double> tau_opt(double beta, double rg) {
  double bt = rg * beta;
  double denom = 1.0 - (beta + bt) / 2.0;
  if (denom <= 1e-12 || !(bt > 0.0)) return std::nullopt;
  return 2.0 / bt * std::log((1.0 - beta / 2.0) / denom);
}

std::vector<double> SweepTable::column(const std::string& observable) const {
  auto it = std::find(observables.begin(), observables.end(), observable);
  if (it == observables.end()) throw ModelError("sweep has no observable " + observable);
  std::size_t j = static_cast<std::size_t>(it - observables.begin());
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.values[j]);
  return out;
}

SweepTable sweep(const std::string& param, const std::vector<double>& grid, const std::vector<std::string>& observables,
                 const RowEvaluator& eval, std::size_t threads) {
  if (grid.empty()) throw ModelError("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    bool up = grid[1] > grid[0];
    if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1])) throw ModelError("sweep grid must be strictly monotone");
  }
  SweepTable t;
  t.param = param;
  t.observables = observables;
  t.rows.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    SweepRow& row = t.rows[i];
    row.param = grid[i];
    try {
      row.values = eval(grid[i]);
      if (row.values.size() != observables.size()) throw ModelError("row evaluator returned the wrong number of values");
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.values.assign(observables.size(), std::numeric_limits<double>::quiet_NaN());
    }
  });
  return t;
}

std::vector<double> linspace(double from, double to, std::size_t steps) {
  if (steps == 0) return {};
  if (steps == 1) return {from};
  std::vector<double> out(steps);
  for (std::size_t i = 0; i < steps; ++i) out[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
  out.back() = to;
  return out;
}

namespace {

SweepTable stickpull_sweep(bool delayed, const std::map<std::string, double>& fixed, const std::string& param,
                           const std::vector<double>& grid, std::size_t threads) {
  std::map<std::string, double> base{{"beta", 0.5}, {"rg", 0.35}};
  if (delayed) base["tau"] = 5.0; else base["gamma"] = 0.2;
  std::set<std::string> sweepable{"beta", "rg"};
  sweepable.insert(delayed ? "tau" : "gamma");
  if (!delayed) sweepable.insert("inv_gamma");
  for (const auto& [k, v] : fixed) {
    if (k == "replace" && v == 1.0) continue;
    if (!base.count(k)) throw ModelError("steady-state sweep cannot fix parameter " + k);
    base[k] = v;
  }
  if (!sweepable.count(param)) throw ModelError("cannot sweep " + param + " in this model");
  SweepTable t = sweep(param, grid, {"n_star", "R"}, [=](double v) {
    auto p = base;
    if (param == "inv_gamma") p["gamma"] = 1.0 / v; else p[param] = v;
    SteadyStateResult s = delayed ? steady_state_delayed(p["beta"], p["tau"], p["rg"]) : steady_state_simple(p["beta"], p["gamma"], p["rg"]);
    return std::vector<double>{s.n, collaboration_rate(s.n, p["beta"], p["rg"])};
  }, threads);
  t.fixed = base;
  return t;
}

}  // namespace

SweepTable sweep_model(const std::string& model, const std::map<std::string, double>& fixed, const std::string& param,
                       const std::vector<double>& grid, std::optional<double> dt, std::size_t threads) {
  SweepTable t;
  if (model == "stickpull-simple" || model == "stickpull-delayed") {
    t = stickpull_sweep(model == "stickpull-delayed", fixed, param, grid, threads);
  } else {
    LoadedModel m = load_model(model);
    if (!m.diagram.find_param(param)) throw ModelError("model has no parameter " + param);
    with_overrides(m.diagram, fixed);  // rejects unknown names up front
    if (!m.completion_counter.empty()) {
      bool foraging = m.diagram.find_param("pucks") && m.diagram.find_param("robots");
      std::vector<std::string> obs{"T"};
      if (foraging) obs.push_back("efficiency");
      t = sweep(param, grid, obs, [&](double v) {
        auto ov = fixed;
        ov[param] = v;
        double T = task_completion_time(m, ov, dt);
        std::vector<double> out{T};
        if (foraging) {
          auto p = resolve_params(with_overrides(m.diagram, ov));
          out.push_back(efficiency_per_robot(T, p.at("robots"), p.at("pucks")));
        }
        return out;
      }, threads);
    } else {
      RateSystem probe = compile_loaded(m, fixed, dt);
      t = sweep(param, grid, probe.names(), [&](double v) {
        auto ov = fixed;
        ov[param] = v;
        RateSystem sys = compile_loaded(m, ov, dt);
        Trajectory tr = simulate(sys, m.t_end, dt.value_or(m.dt));
        std::vector<double> out;
        for (const auto& n : sys.names()) out.push_back(steady_value(tr, n).value);
        return out;
      }, threads);
    }
    t.fixed = fixed;
  }
  t.model = model;
  for (const auto& r : t.rows)
    if (!r.ok) std::cerr << "sweep: " << t.param << "=" << format_number(r.param) << " failed: " << r.error << "\n";
  return t;
}

double completion_time(const Trajectory& traj, const std::string& counter, CompletionMode mode, double threshold) {
  auto v = traj.column(counter);
  auto crossed = [&](double x) { return mode == CompletionMode::depletes_to ? x <= threshold : x >= threshold; };
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!crossed(v[i])) continue;
    if (i == 0) return traj.times[0];
    double t0 = traj.times[i - 1];
    double t1 = traj.times[i];
    double frac = (threshold - v[i - 1]) / (v[i] - v[i - 1]);
    return t0 + frac * (t1 - t0);
  }
  std::ostringstream os;
  os << counter << " did not cross " << threshold << "; final value " << (v.empty() ? std::nan("") : v.back());
  throw NumericError(NumericErrorKind::not_reached, os.str(), traj.times.empty() ? 0.0 : traj.times.back());
}

double task_completion_time(const LoadedModel& m, const std::map<std::string, double>& overrides, std::optional<double> dt,
                            double t_max) {
  if (m.completion_counter.empty()) throw ModelError("model " + m.diagram.name + " has no task counter");
  RateSystem sys = compile_loaded(m, overrides, dt);
  auto idx = sys.index_of(m.completion_counter);
  if (!idx) throw ModelError("model has no counter " + m.completion_counter);
  CompletionMode mode;
  double threshold;
  if (auto it = sys.params().find("target"); it != sys.params().end()) {
    mode = CompletionMode::reaches;
    threshold = it->second;
  } else {
    mode = CompletionMode::depletes_to;
    threshold = 0.05 * sys.initial()[*idx];
  }
  double step = dt.value_or(m.dt);
  for (double horizon = m.t_end;; horizon *= 2.0) {
    Trajectory tr = simulate(sys, std::min(horizon, t_max), step);
    try {
      return completion_time(tr, m.completion_counter, mode, threshold);
    } catch (const NumericError& e) {
      if (e.kind() != NumericErrorKind::not_reached || horizon >= t_max) throw;
    }
  }
}

double foraging_completion_time(const ForagingParams& p, double dt) {
  LoadedModel m = load_model("foraging");
  m.diagram = build_foraging(p);
  return task_completion_time(m, {}, dt);
}

double sugawara_completion_time(const SugawaraParams& p, double dt) {
  LoadedModel m = load_model("sugawara");
  m.diagram = build_sugawara(p);
  return task_completion_time(m, {}, dt);
}

ScalingFit scaling_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::domain_error("scaling_exponent needs at least 3 points");
  std::vector<double> x, y;
  for (const auto& [N, T] : points) {
    if (!(N > 0.0) || !(T > 0.0)) throw std::domain_error("scaling_exponent needs positive N and T");
    x.push_back(std::log(N));
    y.push_back(std::log(T));
  }
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("scaling_exponent: all N are equal");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
  return fit;
}

double efficiency_per_robot(double T, double N0, double M0) {
  if (!(T > 0.0)) throw std::domain_error("efficiency_per_robot: T must be positive");
  return M0 / (N0 * T);
}

}  // namespace swarmk
