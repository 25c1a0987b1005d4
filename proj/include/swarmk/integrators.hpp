#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "swarmk/rate_system.hpp"

namespace swarmk {

/// Time series of value vectors on a uniform grid.
struct Trajectory {
  std::string model;
  std::map<std::string, double> params;
  double dt = 0.0;
  Flavor flavor = Flavor::ode;
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<double>> values;

  std::size_t size() const { return times.size(); }
  OccupationVector at(std::size_t i) const { return {times[i], values[i]}; }
  /// Values of one state or counter over time. Throws ModelError if unknown.
  std::vector<double> column(const std::string& name) const;
};

/// Classical RK4 with fixed step dt from t=0; samples every `stride` steps
/// plus the last one. Throws NumericError (NonFinite, ConservationDrift,
/// NegativePopulation).
Trajectory integrate(const RateSystem& sys, const std::vector<double>& init, double t_end, double dt, std::size_t stride = 1);

/// Method of steps on the RK4 core. Values before t=0 equal init. Every
/// positive delay must be a whole number of steps (DelayMisaligned).
Trajectory integrate_delayed(const RateSystem& sys, const std::vector<double>& init, double t_end, double dt, std::size_t stride = 1);

/// y(k+1) = y(k) + step * F(k). delay() reads grid value k-T; histint() is
/// step * sum of the integrand over the T most recent steps including k.
Trajectory iterate_difference(const RateSystem& sys, const std::vector<double>& init, std::size_t k_steps, std::size_t stride = 1);

/// Dispatches on the flavor, starting from sys.initial(). For the difference
/// flavor dt is ignored and the compiled step is used.
Trajectory simulate(const RateSystem& sys, double t_end, double dt, std::size_t stride = 1);

struct SteadyValue {
  double value = 0.0;   // mean over the last 10% of the window
  double change = 0.0;  // difference to the mean over the preceding 10%
  bool settled = false; // change below 1e-5
};

SteadyValue steady_value(const Trajectory& traj, const std::string& name);

/// max over samples of |sum of the first n_states values - total|.
double max_conservation_drift(const Trajectory& traj, std::size_t n_states, double total);

}  // namespace swarmk
