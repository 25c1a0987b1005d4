#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "swarmk/integrators.hpp"
#include "swarmk/rate_system.hpp"

namespace swarmk {

/// Integer configurations reachable from the initial one, with the
/// transition rates between them.
struct ConfigurationSpace {
  struct Edge {
    std::size_t from;
    std::size_t to;
    double rate;
  };
  std::vector<std::string> names;
  std::vector<std::vector<double>> configs;
  std::vector<Edge> edges;

  std::size_t size() const { return configs.size(); }
};

constexpr std::size_t kMaxConfigurations = 100000;

/// Breadth-first enumeration from sys.initial(). Throws NumericError
/// (StateSpaceTooLarge, Unsupported) or ModelError for non-integral jumps.
ConfigurationSpace enumerate_configurations(const RateSystem& sys, std::size_t cap = kMaxConfigurations);

struct MasterResult {
  ConfigurationSpace space;
  std::vector<double> times;
  std::vector<std::vector<double>> probabilities;  // per output time, per configuration
  Trajectory expectation;
};

/// RK4 on the master equation; outputs every dt_out up to t_end.
MasterResult master_exact(const RateSystem& sys, double t_end, double dt_out);

/// Portable draws from a 64-bit engine.
double uniform01(std::mt19937_64& rng);
double exponential(std::mt19937_64& rng, double rate);

std::uint64_t splitmix64(std::uint64_t x);
/// Seed of run `index` in an ensemble with `master_seed`.
std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t index);

struct StochasticRun {
  Trajectory path;                   // counts at every dt_out
  std::vector<double> time_average;  // per component over [average_from, t_end]
  std::size_t events = 0;
};

/// Gillespie direct method on the configuration-level chain.
StochasticRun ssa_run(const RateSystem& sys, double t_end, std::uint64_t seed, double dt_out, double average_from = 0.0);

/// Dimensional stick pulling with a deterministic gripping time per robot.
struct SemiMarkovParams {
  int robots = 10;
  int sticks = 20;
  double alpha = 0.0;   // grip rate per searcher per free stick; 0: default arena rate
  double alphat = 0.0;  // help rate per searcher per gripper; 0: 0.35 * alpha
  double tau = 0.0;     // gripping time [s]; 0 releases instantly
  bool replace = true;  // extracted sticks are put back
  bool log_events = false;
};

enum class AgentEventKind { grip, success, release };

struct AgentEvent {
  double t;
  AgentEventKind kind;
  int agent;   // the gripper
  int helper;  // -1 unless success
  int searching_after;
  int gripping_after;
  int sticks_after;
};

struct SemiMarkovRun {
  StochasticRun run;  // columns Ns, Ng, M
  std::vector<AgentEvent> events;
};

SemiMarkovRun semimarkov_run(const SemiMarkovParams& p, double t_end, std::uint64_t seed, double dt_out,
                             double average_from = 0.0);

struct EnsembleStats {
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<double>> mean;    // [time][component]
  std::vector<std::vector<double>> std_error;  // sample stddev / sqrt(runs)
  std::size_t runs = 0;
  std::uint64_t master_seed = 0;
};

/// One run: values[time][component] on the common grid.
using RunFunction = std::function<std::vector<std::vector<double>>(std::uint64_t seed)>;

/// Runs with seeds run_seed(master_seed, i), concurrently, and aggregates with
/// compensated sums in run order. Needs at least 2 runs.
EnsembleStats ensemble(const std::vector<std::string>& names, const std::vector<double>& times, const RunFunction& run,
                       std::size_t n_runs, std::uint64_t master_seed, std::size_t threads = 0);

/// Same with explicit per-run seeds.
EnsembleStats ensemble_with_seeds(const std::vector<std::string>& names, const std::vector<double>& times,
                                  const RunFunction& run, const std::vector<std::uint64_t>& seeds, std::size_t threads = 0);

/// Compensated summation (Neumaier).
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace swarmk
