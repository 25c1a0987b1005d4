#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmk/diagram.hpp"
#include "swarmk/rate_system.hpp"

namespace swarmk {

/// Foraging with collision avoidance. Rates are per second per count.
struct ForagingParams {
  int robots = 5;
  int pucks = 20;
  double alpha_p = 0.015;   // puck detection
  double alpha_r = 0.04;    // robot detection while searching
  double alpha_rh = 0.08;   // robot detection while homing
  double tau0 = 3.0;        // avoid duration with one robot [s]
  double tau_slope = 0.2;   // extra avoid duration per added robot [s]
  double tau_h0 = 16.0;     // collision-free homing time [s]
};

/// Dimensionless stick pulling: beta = robots/sticks, rg = gripped/free
/// detection ratio. gamma is used by the simple model, tau by the delayed one.
struct StickPullParams {
  double beta = 0.5;
  double rg = 0.35;
  double gamma = 0.2;
  double tau = 5.0;
  bool replace = true;
};

/// Dimensional stick pulling on integer counts, for the stochastic engines.
struct StickPullCountsParams {
  int robots = 4;
  int sticks = 4;
  double alpha = 0.0;  // 0: encounter_rate(8, 14, 40)
  double rg = 0.35;
  double gamma = 0.2;  // dimensionless; the release rate is gamma * alpha * sticks
  bool replace = true;
};

/// Communicating foraging. gamma_loc is the help-find rate.
struct SugawaraParams {
  int robots = 8;
  double alpha = 0.01;
  double b = 0.05;
  double tau = 5.0;
  double x = 1.0;
  double a = 0.05;
  double l_x = 0.5;
  double d = 2.0;
  double v = 1.0;
  double gamma_loc = 2.0;
  double target = 20.0;  // deliveries that complete the task
};

/// Finite-difference collaboration. Durations are in time units; with the
/// default step dt = 1 they are step counts.
struct CollabDiffParams {
  double alpha = 0.02;
  double alphat = 0.007;
  double alpha_w = 0.01;
  double alpha_r = 0.01;
  int sticks = 4;
  int robots = 6;
  double Ta = 2.0;   // avoidance
  double Ti = 3.0;   // interference
  double Tc = 2.0;   // stick centering
  double Td = 4.0;   // success dance
  double Tg = 20.0;  // gripping time
  double dt = 1.0;
};

StateDiagram build_foraging(const ForagingParams& p = {});
StateDiagram build_stickpull_simple(const StickPullParams& p = {});
StateDiagram build_stickpull_delayed(const StickPullParams& p = {});
StateDiagram build_stickpull_counts(const StickPullCountsParams& p = {});
StateDiagram build_sugawara(const SugawaraParams& p = {});
StateDiagram build_collab_difference(const CollabDiffParams& p = {});

/// Default rate constant of the stick-pulling arena.
double default_stick_alpha();

struct BuiltinModel {
  std::string name;
  std::string summary;
  std::function<StateDiagram()> build;
  bool difference = false;  // compiled as a difference system with step = param dt
  double dt = 0.01;
  double t_end = 100.0;
  std::string completion_counter;  // empty when the model has no task counter
};

const std::vector<BuiltinModel>& builtin_models();
const BuiltinModel* find_builtin(const std::string& name);

/// Directory holding the shipped .mas sources.
std::string models_dir();

/// A model selected by builtin name or .mas path, with its run defaults.
struct LoadedModel {
  StateDiagram diagram;
  bool difference = false;
  double dt = 0.01;
  double t_end = 100.0;
  std::string completion_counter;
};

/// Resolves a builtin name or a file path. A file whose stem names a builtin
/// inherits that builtin's defaults.
LoadedModel load_model(const std::string& spec);

/// Compiles with the model's flavor. For difference models a dt override also
/// replaces the dt parameter so the rates stay per unit time.
RateSystem compile_loaded(const LoadedModel& m, const std::map<std::string, double>& overrides,
                          std::optional<double> dt = std::nullopt);

}  // namespace swarmk
