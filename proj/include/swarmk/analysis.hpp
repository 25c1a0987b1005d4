#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swarmk/integrators.hpp"
#include "swarmk/models.hpp"

namespace swarmk {

enum class Branch { unique, boundary };

const char* to_string(Branch b);

struct SteadyStateResult {
  double n = 0.0;  // fraction searching, in [0, 1]
  Branch branch = Branch::unique;
  double residual = 0.0;
};

/// Root in [0, 1] of (b + bt) n^2 + (1 + gamma - b - bt) n - gamma, bt = rg * beta.
SteadyStateResult steady_state_simple(double beta, double gamma, double rg);
double simple_steady_equation(double n, double beta, double gamma, double rg);

/// Root in [0, 1] of -1 + (b + bt)(1 - n) + (1 - b (1 - n)) exp(-bt tau n).
/// Bisection to a 1e-6 bracket, then Newton. Throws NoRoot without a sign change.
SteadyStateResult steady_state_delayed(double beta, double tau, double rg);
double delayed_steady_equation(double n, double beta, double tau, double rg);

/// Plain bisection of f on [lo, hi] until the bracket is below tol.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14);

/// beta * bt * n * (1 - n).
double collaboration_rate(double n, double beta, double rg);

double beta_critical(double rg);
/// 1 - (beta + bt)/2; 0 at beta_critical, none above.
std::optional<double> gamma_opt(double beta, double rg);
/// (2/bt) ln[(1 - beta/2) / (1 - (beta + bt)/2)]; none at or above beta_critical.
std::optional<double> tau_opt(double beta, double rg);

struct SweepRow {
  double param = 0.0;
  std::vector<double> values;  // NaN when the row failed
  bool ok = true;
  std::string error;
};

struct SweepTable {
  std::string model;
  std::map<std::string, double> fixed;
  std::string param;
  std::vector<std::string> observables;
  std::vector<SweepRow> rows;

  std::vector<double> column(const std::string& observable) const;
};

using RowEvaluator = std::function<std::vector<double>(double)>;

/// Evaluates every grid value, possibly concurrently; rows stay in grid order.
/// A throwing row is kept with ok = false and NaN values. The grid must be
/// non-empty and strictly monotone.
SweepTable sweep(const std::string& param, const std::vector<double>& grid, const std::vector<std::string>& observables,
                 const RowEvaluator& eval, std::size_t threads = 0);

/// `steps` evenly spaced points from `from` to `to` inclusive.
std::vector<double> linspace(double from, double to, std::size_t steps);

/// Sweeps a model by name or path. Stick-pulling models report n_star and R
/// (parameters beta, rg, gamma or inv_gamma, tau); models with a task counter
/// report T (and efficiency for foraging); anything else reports the
/// long-time value of every state and counter.
SweepTable sweep_model(const std::string& model, const std::map<std::string, double>& fixed, const std::string& param,
                       const std::vector<double>& grid, std::optional<double> dt = std::nullopt, std::size_t threads = 0);

enum class CompletionMode { depletes_to, reaches };

/// First crossing of the threshold, linearly interpolated between samples.
/// Throws NotReached with the final counter value.
double completion_time(const Trajectory& traj, const std::string& counter, CompletionMode mode, double threshold);

/// Integrates until the task counter crosses its threshold (foraging: M at
/// 5% of the initial pucks; others: the `target` parameter), extending the
/// horizon up to t_max.
double task_completion_time(const LoadedModel& m, const std::map<std::string, double>& overrides,
                            std::optional<double> dt = std::nullopt, double t_max = 1e6);

double foraging_completion_time(const ForagingParams& p, double dt = 0.05);
double sugawara_completion_time(const SugawaraParams& p, double dt = 0.01);

struct ScalingFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// Least-squares slope of log T against log N. Needs at least 3 positive points
/// with distinct N.
ScalingFit scaling_exponent(const std::vector<std::pair<double, double>>& points);

/// M0 / (N0 * T).
double efficiency_per_robot(double T, double N0, double M0);

}  // namespace swarmk
