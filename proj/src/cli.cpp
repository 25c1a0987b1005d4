#include "swarmk/cli.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "swarmk/analysis.hpp"
#include "swarmk/errors.hpp"
#include "swarmk/models.hpp"
#include "swarmk/parser.hpp"
#include "swarmk/stochastic.hpp"

namespace swarmk {

namespace {

using json = nlohmann::json;

struct Options {
  std::string model;
  std::vector<std::string> sets;
  double dt = 0.0;
  double t_end = 0.0;
  std::size_t stride = 1;
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  std::string param;
  double from = 0.0;
  double to = 1.0;
  std::size_t steps = 11;
  std::string out_path;
  std::string format = "csv";
  std::size_t threads = 0;
  CLI::Option* dt_opt = nullptr;
  CLI::Option* t_end_opt = nullptr;

  std::optional<double> dt_value() const { return dt_opt && dt_opt->count() ? std::optional<double>(dt) : std::nullopt; }
  std::optional<double> t_end_value() const { return t_end_opt && t_end_opt->count() ? std::optional<double>(t_end) : std::nullopt; }
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::map<std::string, double> parse_sets(const std::vector<std::string>& sets) {
  std::map<std::string, double> out;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects name=value, got '" + s + "'");
    std::string name = s.substr(0, eq);
    std::string value = s.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw UsageError("--set " + name + ": '" + value + "' is not a number");
    out[name] = v;
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

void write_row(std::ostream& os, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_number(v[i]);
  os << "\n";
}

class Output {
 public:
  Output(const Options& o, std::ostream& fallback) {
    if (!o.out_path.empty()) {
      file_.open(o.out_path, std::ios::binary);
      if (!file_) throw UsageError("cannot write " + o.out_path);
      os_ = &file_;
    } else {
      os_ = &fallback;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

json trajectory_json(const Trajectory& tr) {
  json j;
  j["model"] = tr.model;
  j["flavor"] = to_string(tr.flavor);
  j["dt"] = tr.dt;
  j["params"] = tr.params;
  j["names"] = tr.names;
  j["times"] = tr.times;
  j["values"] = tr.values;
  return j;
}

void write_trajectory(std::ostream& os, const Trajectory& tr, const std::string& format) {
  if (format == "json") {
    os << trajectory_json(tr).dump() << "\n";
    return;
  }
  os << "t," << join(tr.names) << "\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    std::vector<double> row{tr.times[i]};
    row.insert(row.end(), tr.values[i].begin(), tr.values[i].end());
    write_row(os, row);
  }
}

LoadedModel require_model(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  return load_model(o.model);
}

int cmd_run(const Options& o, std::ostream& out) {
  LoadedModel m = require_model(o);
  RateSystem sys = compile_loaded(m, parse_sets(o.sets), o.dt_value());
  double dt = sys.flavor() == Flavor::difference ? sys.step() : o.dt_value().value_or(m.dt);
  Trajectory tr = simulate(sys, o.t_end_value().value_or(m.t_end), dt, o.stride);
  Output dst(o, out);
  write_trajectory(*dst, tr, o.format);
  return exit_ok;
}

int cmd_steady(const Options& o, std::ostream& out) {
  LoadedModel m = require_model(o);
  auto sets = parse_sets(o.sets);
  Output dst(o, out);
  std::vector<std::pair<std::string, json>> fields;
  bool simple = m.diagram.name == "stickpull-simple";
  bool delayed = m.diagram.name == "stickpull-delayed";
  if (simple || delayed) {
    auto p = resolve_params(with_overrides(m.diagram, sets));
    SteadyStateResult r = simple ? steady_state_simple(p.at("beta"), p.at("gamma"), p.at("rg"))
                                 : steady_state_delayed(p.at("beta"), p.at("tau"), p.at("rg"));
    fields = {{"n_star", r.n}, {"residual", r.residual}, {"branch", to_string(r.branch)}, {"R", collaboration_rate(r.n, p.at("beta"), p.at("rg"))}};
  } else {
    RateSystem sys = compile_loaded(m, sets, o.dt_value());
    double dt = sys.flavor() == Flavor::difference ? sys.step() : o.dt_value().value_or(m.dt);
    Trajectory tr = simulate(sys, o.t_end_value().value_or(m.t_end), dt);
    bool settled = true;
    for (const auto& n : sys.names()) {
      SteadyValue s = steady_value(tr, n);
      fields.emplace_back(n, s.value);
      settled = settled && s.settled;
    }
    fields.emplace_back("settled", settled);
  }
  if (o.format == "json") {
    json j = json::object();
    for (const auto& [k, v] : fields) j[k] = v;
    *dst << j.dump() << "\n";
  } else {
    for (const auto& [k, v] : fields) {
      *dst << k << "=";
      if (v.is_number()) *dst << format_number(v.get<double>()); else if (v.is_boolean()) *dst << (v.get<bool>() ? "true" : "false"); else *dst << v.get<std::string>();
      *dst << "\n";
    }
  }
  return exit_ok;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  if (o.model.empty()) throw UsageError("--model is required");
  if (o.param.empty()) throw UsageError("--param is required");
  if (o.steps < 1) throw UsageError("--steps must be at least 1");
  SweepTable t = sweep_model(o.model, parse_sets(o.sets), o.param, linspace(o.from, o.to, o.steps), o.dt_value(), o.threads);
  Output dst(o, out);
  if (o.format == "json") {
    json j;
    j["model"] = t.model;
    j["param"] = t.param;
    j["fixed"] = t.fixed;
    j["observables"] = t.observables;
    j["rows"] = json::array();
    for (const auto& r : t.rows) {
      json row{{"param", r.param}, {"values", r.values}, {"ok", r.ok}};
      if (!r.ok) row["error"] = r.error;
      j["rows"].push_back(row);
    }
    *dst << j.dump() << "\n";
  } else {
    *dst << "param," << join(t.observables) << "\n";
    for (const auto& r : t.rows) {
      std::vector<double> row{r.param};
      row.insert(row.end(), r.values.begin(), r.values.end());
      write_row(*dst, row);
    }
  }
  return exit_ok;
}

// Integer-count version of a model for the stochastic engines. The
// dimensionless stick-pulling models map to robot counts (set with
// robots=N, sticks=M) and report fractions on their own time axis.
struct CountSetup {
  bool agents = false;
  std::optional<RateSystem> sys;
  SemiMarkovParams agent_params;
  std::vector<std::string> names;
  std::vector<double> scale;  // divide counts by this
  double time_scale = 1.0;    // model time per engine time unit
};

CountSetup count_setup(const LoadedModel& m, std::map<std::string, double> sets) {
  CountSetup c;
  const std::string& name = m.diagram.name;
  if (name != "stickpull-simple" && name != "stickpull-delayed") {
    RateSystem sys = compile_loaded(m, sets);
    c.names = sys.names();
    c.scale.assign(c.names.size(), 1.0);
    c.sys = std::move(sys);
    return c;
  }
  std::optional<double> robots, sticks;
  if (auto it = sets.find("robots"); it != sets.end()) {
    robots = it->second;
    sets.erase(it);
  }
  if (auto it = sets.find("sticks"); it != sets.end()) {
    sticks = it->second;
    sets.erase(it);
  }
  auto p = resolve_params(with_overrides(m.diagram, sets));
  int n0 = static_cast<int>(std::lround(robots.value_or(10.0)));
  int m0 = static_cast<int>(std::lround(sticks.value_or(n0 / p.at("beta"))));
  if (n0 < 1 || m0 < 1) throw ModelError("robots and sticks must be at least 1");
  double alpha = default_stick_alpha();
  c.time_scale = alpha * m0;
  c.names = {"n", "g", "m"};
  c.scale = {double(n0), double(n0), double(m0)};
  bool replace = p.at("replace") != 0.0;
  if (name == "stickpull-delayed") {
    c.agents = true;
    c.agent_params.robots = n0;
    c.agent_params.sticks = m0;
    c.agent_params.alpha = alpha;
    c.agent_params.alphat = p.at("rg") * alpha;
    c.agent_params.tau = p.at("tau") / c.time_scale;
    c.agent_params.replace = replace;
  } else {
    StickPullCountsParams q;
    q.robots = n0;
    q.sticks = m0;
    q.rg = p.at("rg");
    q.gamma = p.at("gamma");
    q.replace = replace;
    c.sys = compile_rhs(build_stickpull_counts(q));
  }
  return c;
}

std::vector<double> output_grid(double t_end, double dt_out) {
  if (!(dt_out > 0.0)) throw UsageError("output step must be positive");
  auto n = static_cast<std::size_t>(std::ceil(t_end / dt_out - 1e-9));
  std::vector<double> g;
  for (std::size_t k = 0; k <= n; ++k) g.push_back(std::min(static_cast<double>(k) * dt_out, t_end));
  return g;
}

EnsembleStats run_mc(const CountSetup& c, double t_end, double dt_out, std::size_t runs, std::uint64_t seed, std::size_t threads) {
  double te = t_end / c.time_scale;
  double step = dt_out / c.time_scale;
  RunFunction fn = [&](std::uint64_t s) {
    Trajectory path = c.agents ? semimarkov_run(c.agent_params, te, s, step).run.path : ssa_run(*c.sys, te, s, step).path;
    for (auto& row : path.values)
      for (std::size_t i = 0; i < row.size(); ++i) row[i] /= c.scale[i];
    return path.values;
  };
  if (runs < 2) throw UsageError("--runs must be at least 2");
  return ensemble(c.names, output_grid(t_end, dt_out), fn, runs, seed, threads);
}

Trajectory run_exact(const CountSetup& c, double t_end, double dt_out) {
  if (c.agents) throw NumericError(NumericErrorKind::unsupported, "the exact solver needs a memoryless model; this one has delay terms");
  MasterResult r = master_exact(*c.sys, t_end / c.time_scale, dt_out / c.time_scale);
  Trajectory tr = r.expectation;
  tr.names = c.names;
  for (auto& t : tr.times) t *= c.time_scale;
  for (auto& row : tr.values)
    for (std::size_t i = 0; i < row.size(); ++i) row[i] /= c.scale[i];
  tr.dt = dt_out;
  return tr;
}

int cmd_mc(const Options& o, std::ostream& out) {
  LoadedModel m = require_model(o);
  CountSetup c = count_setup(m, parse_sets(o.sets));
  double t_end = o.t_end_value().value_or(m.t_end);
  EnsembleStats st = run_mc(c, t_end, o.dt_value().value_or(t_end / 100.0), o.runs, o.seed, o.threads);
  Output dst(o, out);
  if (o.format == "json") {
    json j{{"model", m.diagram.name}, {"runs", st.runs}, {"seed", st.master_seed}, {"names", st.names},
           {"times", st.times}, {"mean", st.mean}, {"stderr", st.std_error}};
    *dst << j.dump() << "\n";
    return exit_ok;
  }
  *dst << "t";
  for (const auto& n : st.names) *dst << "," << n << "_mean," << n << "_stderr";
  *dst << "\n";
  for (std::size_t k = 0; k < st.times.size(); ++k) {
    std::vector<double> row{st.times[k]};
    for (std::size_t i = 0; i < st.names.size(); ++i) {
      row.push_back(st.mean[k][i]);
      row.push_back(st.std_error[k][i]);
    }
    write_row(*dst, row);
  }
  return exit_ok;
}

int cmd_exact(const Options& o, std::ostream& out) {
  LoadedModel m = require_model(o);
  CountSetup c = count_setup(m, parse_sets(o.sets));
  double t_end = o.t_end_value().value_or(m.t_end);
  Trajectory tr = run_exact(c, t_end, o.dt_value().value_or(t_end / 100.0));
  Output dst(o, out);
  write_trajectory(*dst, tr, o.format);
  return exit_ok;
}

int cmd_compare(const Options& o, std::ostream& out) {
  LoadedModel m = require_model(o);
  auto sets = parse_sets(o.sets);
  CountSetup c = count_setup(m, sets);
  double t_end = o.t_end_value().value_or(m.t_end);
  double dt_out = o.dt_value().value_or(t_end / 100.0);
  auto grid = output_grid(t_end, dt_out);

  // Mean field on the same axis: the model itself for the dimensionless
  // stick-pulling models, the count model otherwise.
  std::map<std::string, double> mf_sets = sets;
  mf_sets.erase("robots");
  mf_sets.erase("sticks");
  bool mapped = c.time_scale != 1.0 || c.agents;
  RateSystem mf_sys = mapped ? compile_loaded(m, mf_sets) : *c.sys;
  if (mapped) {
    double beta = static_cast<double>(c.scale[0]) / c.scale[2];
    mf_sys = compile_loaded(m, [&] { auto s = mf_sets; s["beta"] = beta; return s; }());
  }
  double h = std::min(m.dt, dt_out);
  auto per = static_cast<std::size_t>(std::llround(dt_out / h));
  if (std::fabs(static_cast<double>(per) * h - dt_out) > 1e-9 * dt_out) throw UsageError("output step must be a multiple of the model step");
  Trajectory mf = simulate(mf_sys, t_end, h, per);

  std::optional<Trajectory> ex;
  if (!c.agents) ex = run_exact(c, t_end, dt_out);
  EnsembleStats mc = run_mc(c, t_end, dt_out, o.runs, o.seed, o.threads);

  Output dst(o, out);
  *dst << "t";
  for (const auto& n : c.names) {
    *dst << "," << n << "_mf";
    if (ex) *dst << "," << n << "_exact";
    *dst << "," << n << "_mc," << n << "_mc_stderr";
    if (ex) *dst << "," << n << "_gap_exact";
    *dst << "," << n << "_gap_mc";
  }
  *dst << "\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> row{grid[k]};
    for (std::size_t i = 0; i < c.names.size(); ++i) {
      double f = k < mf.size() ? mf.values[k][i] : std::numeric_limits<double>::quiet_NaN();
      row.push_back(f);
      if (ex) row.push_back(ex->values[k][i]);
      row.push_back(mc.mean[k][i]);
      row.push_back(mc.std_error[k][i]);
      if (ex) row.push_back(ex->values[k][i] - f);
      row.push_back(mc.mean[k][i] - f);
    }
    write_row(*dst, row);
  }
  return exit_ok;
}

std::string where(const std::string& origin, SourceLoc loc) {
  if (!loc.known()) return origin;
  return origin + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.column);
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  LoadedModel m = require_model(o);
  StateDiagram d = with_overrides(m.diagram, parse_sets(o.sets));
  std::string origin = find_builtin(o.model) ? o.model : o.model;
  ValidationReport rep = validate_diagram(d);
  for (const auto& w : rep.warnings) err << where(origin, w.loc) << ": warning: " << w.message << "\n";
  for (const auto& f : rep.defects) err << where(origin, f.loc) << ": " << f.message << "\n";
  if (!rep.ok()) return exit_model;
  Output dst(o, out);
  *dst << "ok: " << d.name << " (" << d.states.size() << " states, " << d.envs.size() << " counters, " << d.transitions.size()
       << " transitions)\n";
  return exit_ok;
}

int cmd_list(const Options& o, std::ostream& out) {
  Output dst(o, out);
  for (const auto& b : builtin_models()) *dst << b.name << "\t" << b.summary << "\n";
  return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"swarmk"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field and stochastic models of multi-agent systems"};
  app.require_subcommand(1);
  Options o;

  auto model_opts = [&](CLI::App* s) {
    s->add_option("--model", o.model, "builtin name or .mas file");
    s->add_option("--set", o.sets, "parameter override name=value (repeatable)");
    s->add_option("--out", o.out_path, "output file (default stdout)");
    s->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto timing = [&](CLI::App* s, const char* dt_help) {
    o.dt_opt = s->add_option("--dt", o.dt, dt_help)->check(CLI::PositiveNumber);
    o.t_end_opt = s->add_option("--t-end", o.t_end, "end time")->check(CLI::NonNegativeNumber);
  };
  auto stochastic = [&](CLI::App* s) {
    s->add_option("--runs", o.runs, "number of runs");
    s->add_option("--seed", o.seed, "master seed");
    s->add_option("--threads", o.threads, "worker threads (0: automatic)");
  };

  CLI::App* run = app.add_subcommand("run", "integrate the rate equations, print the trajectory");
  model_opts(run);
  timing(run, "step size");
  run->add_option("--stride", o.stride, "output every n-th step")->check(CLI::PositiveNumber);
  CLI::App* steady = app.add_subcommand("steady", "steady state (root and residual for stick pulling)");
  model_opts(steady);
  timing(steady, "step size");
  CLI::App* sw = app.add_subcommand("sweep", "sweep a parameter over an even grid");
  model_opts(sw);
  sw->add_option("--param", o.param, "parameter to sweep");
  sw->add_option("--from", o.from, "first grid value");
  sw->add_option("--to", o.to, "last grid value");
  sw->add_option("--steps", o.steps, "number of grid points");
  sw->add_option("--threads", o.threads, "worker threads (0: automatic)");
  o.dt_opt = nullptr;
  CLI::Option* sweep_dt = sw->add_option("--dt", o.dt, "step size for integrated observables")->check(CLI::PositiveNumber);
  CLI::App* mc = app.add_subcommand("mc", "stochastic ensemble, mean and standard error");
  model_opts(mc);
  timing(mc, "output interval");
  stochastic(mc);
  CLI::App* exact = app.add_subcommand("exact", "master equation expectation");
  model_opts(exact);
  timing(exact, "output interval");
  CLI::App* cmp = app.add_subcommand("compare", "mean field vs exact vs stochastic");
  model_opts(cmp);
  timing(cmp, "output interval");
  stochastic(cmp);
  CLI::App* val = app.add_subcommand("validate", "check a model");
  val->add_option("--model", o.model, "builtin name or .mas file");
  val->add_option("--set", o.sets, "parameter override name=value (repeatable)");
  CLI::App* list = app.add_subcommand("list", "list builtin models");
  list->add_option("--out", o.out_path, "output file (default stdout)");

  // --dt/--t-end are registered per subcommand; point at the parsed ones.
  std::map<CLI::App*, std::pair<CLI::Option*, CLI::Option*>> timing_opts;
  for (CLI::App* s : {run, steady, mc, exact, cmp}) timing_opts[s] = {s->get_option("--dt"), s->get_option("--t-end")};
  timing_opts[sw] = {sweep_dt, nullptr};

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (auto it = timing_opts.find(chosen); it != timing_opts.end()) {
      o.dt_opt = it->second.first;
      o.t_end_opt = it->second.second;
    }
    if (chosen == run) return cmd_run(o, out);
    if (chosen == steady) return cmd_steady(o, out);
    if (chosen == sw) return cmd_sweep(o, out);
    if (chosen == mc) return cmd_mc(o, out);
    if (chosen == exact) return cmd_exact(o, out);
    if (chosen == cmp) return cmd_compare(o, out);
    if (chosen == val) return cmd_validate(o, out, err);
    if (chosen == list) return cmd_list(o, out);
    return exit_usage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return exit_model;
  } catch (const NumericError& e) {
    err << "numeric error (" << to_string(e.kind()) << ")";
    if (!std::isnan(e.time())) err << " at t=" << format_number(e.time());
    err << ": " << e.what() << "\n";
    return exit_numeric;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_model;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_numeric;
  }
}

}  // namespace swarmk
