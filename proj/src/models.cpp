#include "swarmk/models.hpp"

#include <filesystem>

#include "swarmk/errors.hpp"
#include "swarmk/parser.hpp"

#ifndef SWARMK_MODELS_DIR
#define SWARMK_MODELS_DIR "models"
#endif

namespace swarmk {

namespace {

Expr num(double v) { return Expr::number(v); }

void param(StateDiagram& d, const std::string& name, Expr value) { d.params.push_back({name, std::move(value), {}}); }
void state(StateDiagram& d, const std::string& name, Expr value) { d.states.push_back({name, std::move(value), {}}); }
void env(StateDiagram& d, const std::string& name, Expr value) { d.envs.push_back({name, std::move(value), {}}); }

void rate(StateDiagram& d, Expr r, const std::string& from, const std::string& to, std::vector<EnvEffect> effects = {}) {
  d.transitions.push_back({from, to, std::move(r), std::move(effects), {}});
}

EnvEffect add_to(const std::string& e, Expr amount) { return {e, false, std::move(amount), {}}; }
EnvEffect take_from(const std::string& e, Expr amount) { return {e, true, std::move(amount), {}}; }

// Shared head of both dimensionless stick-pulling models.
void stickpull_head(StateDiagram& d, const StickPullParams& p, const std::string& timing, double timing_value) {
  param(d, "beta", num(p.beta));
  param(d, timing, num(timing_value));
  param(d, "rg", num(p.rg));
  param(d, "replace", num(p.replace ? 1.0 : 0.0));
  param(d, "bt", var("rg") * var("beta"));
  state(d, "n", num(1));
  state(d, "g", num(0));
  env(d, "m", num(1));
  rate(d, var("n") * (var("m") - var("beta") * var("g")), "n", "g");
  rate(d, var("bt") * var("n") * var("g"), "g", "n", {take_from("m", var("beta") * (1.0 - var("replace")))});
}

}  // namespace

double default_stick_alpha() { return encounter_rate(8.0, 14.0, 40.0); }

StateDiagram build_stickpull_simple(const StickPullParams& p) {
  StateDiagram d;
  d.name = "stickpull-simple";
  stickpull_head(d, p, "gamma", p.gamma);
  rate(d, var("gamma") * var("g"), "g", "n");
  return d;
}

StateDiagram build_stickpull_delayed(const StickPullParams& p) {
  StateDiagram d;
  d.name = "stickpull-delayed";
  stickpull_head(d, p, "tau", p.tau);
  Expr entering = fn::delay(var("n") * (var("m") - var("beta") * var("g")), var("tau"));
  Expr unhelped = fn::exp(-var("bt") * fn::histint(var("n"), var("tau")));
  rate(d, entering * unhelped * fn::step(var("t") - var("tau")), "g", "n");
  return d;
}

StateDiagram build_stickpull_counts(const StickPullCountsParams& p) {
  StateDiagram d;
  d.name = "stickpull-counts";
  param(d, "robots", num(p.robots));
  param(d, "sticks", num(p.sticks));
  if (p.alpha == 0.0) {
    param(d, "alpha", num(8) * 14.0 / (num(3.141592653589793) * 40.0 * 40.0));
  } else {
    param(d, "alpha", num(p.alpha));
  }
  param(d, "rg", num(p.rg));
  param(d, "gamma", num(p.gamma));
  param(d, "replace", num(p.replace ? 1.0 : 0.0));
  param(d, "alphat", var("rg") * var("alpha"));
  param(d, "gammad", var("gamma") * var("alpha") * var("sticks"));
  state(d, "Ns", var("robots"));
  state(d, "Ng", num(0));
  env(d, "M", var("sticks"));
  rate(d, var("alpha") * var("Ns") * (var("M") - var("Ng")), "Ns", "Ng");
  rate(d, var("alphat") * var("Ns") * var("Ng"), "Ng", "Ns", {take_from("M", 1.0 - var("replace"))});
  rate(d, var("gammad") * var("Ng"), "Ng", "Ns");
  return d;
}

StateDiagram build_foraging(const ForagingParams& p) {
  StateDiagram d;
  d.name = "foraging";
  param(d, "robots", num(p.robots));
  param(d, "pucks", num(p.pucks));
  param(d, "alpha_p", num(p.alpha_p));
  param(d, "alpha_r", num(p.alpha_r));
  param(d, "alpha_rh", num(p.alpha_rh));
  param(d, "tau0", num(p.tau0));
  param(d, "tau_slope", num(p.tau_slope));
  param(d, "tau_h0", num(p.tau_h0));
  param(d, "tau", var("tau0") + var("tau_slope") * (var("robots") - 1.0));
  param(d, "tau_h", var("tau_h0") * (1.0 + var("alpha_rh") * var("tau") * var("robots")));
  state(d, "Ns", var("robots"));
  state(d, "Nh", num(0));
  state(d, "Nas", num(0));
  state(d, "Nah", num(0));
  env(d, "M", var("pucks"));
  rate(d, var("alpha_p") * var("Ns") * (var("M") - var("Nh") - var("Nah")), "Ns", "Nh");
  rate(d, var("alpha_r") * var("Ns") * (var("Ns") + var("N0")), "Ns", "Nas");
  rate(d, var("Nas") / var("tau"), "Nas", "Ns");
  rate(d, var("Nh") / var("tau_h"), "Nh", "Ns", {take_from("M", num(1))});
  rate(d, var("alpha_rh") * var("Nh") * (var("Nh") + var("N0")), "Nh", "Nah");
  rate(d, var("Nah") / var("tau"), "Nah", "Nh");
  return d;
}

StateDiagram build_sugawara(const SugawaraParams& p) {
  StateDiagram d;
  d.name = "sugawara";
  param(d, "robots", num(p.robots));
  param(d, "alpha", num(p.alpha));
  param(d, "b", num(p.b));
  param(d, "tau", num(p.tau));
  param(d, "x", num(p.x));
  param(d, "a", num(p.a));
  param(d, "l_x", num(p.l_x));
  param(d, "d", num(p.d));
  param(d, "v", num(p.v));
  param(d, "gamma_loc", num(p.gamma_loc));
  param(d, "target", num(p.target));
  state(d, "Ns", var("robots"));
  for (const char* s : {"Nb", "Nh", "Nm", "Na"}) state(d, s, num(0));
  env(d, "delivered", num(0));
  rate(d, var("alpha") * var("Ns"), "Ns", "Nb");
  rate(d, var("Nb") / (var("x") + 1.0), "Nb", "Nh");
  rate(d, var("Nh") / var("tau"), "Nh", "Ns", {add_to("delivered", num(1))});
  rate(d, var("a") * var("l_x") * var("Ns") * var("Nb"), "Ns", "Nm");
  rate(d, var("b") * var("Nm"), "Nm", "Ns");
  rate(d, var("v") / var("d") * var("Nm"), "Nm", "Na");
  rate(d, var("gamma_loc") / (var("a") + var("Na")) * var("Na"), "Na", "Nb");
  return d;
}

StateDiagram build_collab_difference(const CollabDiffParams& p) {
  StateDiagram d;
  d.name = "collab-difference";
  param(d, "alpha", num(p.alpha));
  param(d, "alphat", num(p.alphat));
  param(d, "alpha_w", num(p.alpha_w));
  param(d, "alpha_r", num(p.alpha_r));
  param(d, "sticks", num(p.sticks));
  param(d, "robots", num(p.robots));
  param(d, "Ta", num(p.Ta));
  param(d, "Ti", num(p.Ti));
  param(d, "Tc", num(p.Tc));
  param(d, "Td", num(p.Td));
  param(d, "Tg", num(p.Tg));
  param(d, "dt", num(p.dt));
  param(d, "Tia", var("Ti") + var("Ta"));
  param(d, "Tca", var("Tc") + var("Ta"));
  param(d, "Tcda", var("Tc") + var("Td") + var("Ta"));
  param(d, "Tga", var("Tg") + var("Ta"));
  param(d, "Tcga", var("Tc") + var("Tg") + var("Ta"));
  state(d, "Ns", var("robots"));
  for (const char* s : {"Nav", "Ni", "Nh", "Nd", "Nc", "Ng"}) state(d, s, num(0));
  env(d, "pulled", num(0));

  auto after = [](const char* T) { return fn::step(var("t") - var(T)); };
  Expr Ns = var("Ns");
  Expr success = var("Ng") * Ns;
  Expr grab = (var("sticks") - var("Ng")) * Ns;
  rate(d, var("alpha_w") * Ns, "Ns", "Nav");
  rate(d, after("Ta") * var("alpha_w") * fn::delay(Ns, var("Ta")), "Nav", "Ns");
  rate(d, var("alpha_r") * Ns, "Ns", "Ni");
  rate(d, after("Tia") * var("alpha_r") * fn::delay(Ns, var("Tia")), "Ni", "Ns");
  rate(d, var("alphat") * var("Ng") * Ns, "Ns", "Nh", {add_to("pulled", num(1))});
  rate(d, after("Tca") * var("alphat") * fn::delay(success, var("Tca")), "Nh", "Ns");
  rate(d, var("alphat") * var("Ng") * Ns, "Ng", "Nd");
  rate(d, after("Tcda") * var("alphat") * fn::delay(success, var("Tcda")), "Nd", "Ns");
  rate(d, var("alpha") * (var("sticks") - var("Ng")) * Ns, "Ns", "Nc");
  rate(d, after("Tc") * var("alpha") * fn::delay(grab, var("Tc")), "Nc", "Ng");
  // Unaided release of the cohort that started gripping Tga ago and was never helped.
  Expr survive = fn::exp(fn::histint(fn::ln(1.0 - var("alphat") * var("dt") * Ns) / var("dt"), var("Tga")));
  rate(d, after("Tcga") * var("alpha") * fn::delay(grab, var("Tcga")) * survive, "Ng", "Ns");
  return d;
}

const std::vector<BuiltinModel>& builtin_models() {
  static const std::vector<BuiltinModel> models{
      {"stickpull-simple", "stick pulling, constant release rate (dimensionless)", [] { return build_stickpull_simple(); }, false, 0.01, 100.0, ""},
      {"stickpull-delayed", "stick pulling, deterministic gripping time (dimensionless)", [] { return build_stickpull_delayed(); }, false, 0.01, 200.0, ""},
      {"stickpull-counts", "stick pulling on robot counts (seconds)", [] { return build_stickpull_counts(); }, false, 0.05, 250.0, ""},
      {"foraging", "foraging with collision avoidance (seconds)", [] { return build_foraging(); }, false, 0.05, 2000.0, "M"},
      {"sugawara", "foraging with signal broadcast", [] { return build_sugawara(); }, false, 0.01, 3000.0, "delivered"},
      {"collab-difference", "stick pulling with avoidance, difference equations", [] { return build_collab_difference(); }, true, 1.0, 1000.0, "pulled"},
  };
  return models;
}

const BuiltinModel* find_builtin(const std::string& name) {
  for (const auto& m : builtin_models())
    if (m.name == name) return &m;
  return nullptr;
}

std::string models_dir() { return SWARMK_MODELS_DIR; }

LoadedModel load_model(const std::string& spec) {
  LoadedModel out;
  const BuiltinModel* b = find_builtin(spec);
  if (b) {
    out.diagram = b->build();
  } else {
    if (!std::filesystem::exists(spec)) throw ModelError("unknown model " + spec + " (not a builtin and no such file)");
    out.diagram = load_model_file(spec);
    b = find_builtin(std::filesystem::path(spec).stem().string());
  }
  if (b) {
    out.difference = b->difference;
    out.dt = b->dt;
    out.t_end = b->t_end;
    out.completion_counter = b->completion_counter;
  }
  return out;
}

RateSystem compile_loaded(const LoadedModel& m, const std::map<std::string, double>& overrides, std::optional<double> dt) {
  auto ov = overrides;
  if (!m.difference) return compile_rhs(with_overrides(m.diagram, ov), {});
  if (dt) ov["dt"] = *dt;
  StateDiagram d = with_overrides(m.diagram, ov);
  CompileOptions opts;
  opts.flavor = Flavor::difference;
  opts.step = resolve_params(d).at("dt");
  return compile_rhs(d, opts);
}

}  // namespace swarmk
