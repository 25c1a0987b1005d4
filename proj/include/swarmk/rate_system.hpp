#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmk/diagram.hpp"
#include "swarmk/errors.hpp"

namespace swarmk {

/// Counts per state followed by environment counter values, at one instant.
struct OccupationVector {
  double t = 0.0;
  std::vector<double> values;
};

/// Past values seen by delay() and histint() terms.
class HistoryAccessor {
 public:
  virtual ~HistoryAccessor() = default;
  /// Writes the full value vector (states then envs) at time t into out.
  virtual void state_at(double t, double* out) const = 0;
  /// Integral of histint integrand `slot` over [from, to]. `current` is the
  /// integrand evaluated at `to` with the state being differentiated.
  virtual double integral(std::size_t slot, double from, double to, double current) const = 0;
};

enum class Flavor { ode, dde, difference };

const char* to_string(Flavor f);

struct CompileOptions {
  /// Unset: ode, or dde when any rate reads history.
  std::optional<Flavor> flavor;
  /// Step size of the difference flavor.
  double step = 1.0;
};

/// Compiled right-hand side of the rate equations.
///
/// Layout of every value vector is states (declaration order) then
/// environment counters. Parameters are folded to constants. Evaluation is
/// pure and thread-safe.
class RateSystem {
 public:
  std::size_t dimension() const { return names_.size(); }
  std::size_t state_count() const { return n_states_; }
  std::size_t env_count() const { return names_.size() - n_states_; }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  Flavor flavor() const { return flavor_; }
  double step() const { return step_; }
  double max_delay() const;
  /// Distinct positive windows of delay() and histint() terms.
  std::vector<double> delays() const;
  bool has_history() const { return has_history_; }
  bool depends_on_time() const { return uses_time_; }

  std::vector<double> initial() const { return initial_; }
  double total() const { return total_; }
  const std::map<std::string, double>& params() const { return params_; }
  const std::string& model_name() const { return model_name_; }

  /// dy/dt (or the per-step increment rate of the difference flavor).
  void derivative(double t, const double* y, const HistoryAccessor* h, double* dy) const;
  std::vector<double> derivative(double t, const std::vector<double>& y, const HistoryAccessor* h = nullptr) const;

  std::size_t transition_count() const { return channels_.size(); }
  std::size_t source(std::size_t j) const { return channels_[j].source; }
  std::size_t target(std::size_t j) const { return channels_[j].target; }
  /// Flow of every transition.
  void flows(double t, const double* y, const HistoryAccessor* h, double* out) const;
  /// Change of the value vector when transition j fires once.
  void jump(std::size_t j, double t, const double* y, double* delta) const;

  std::size_t histint_count() const { return histints_.size(); }
  /// Integrands of every histint term at (t, y).
  void histint_integrands(double t, const double* y, double* out) const;

  /// Number of signed flow terms in the derivative of state k.
  std::size_t terms_for_state(std::size_t k) const;

 private:
  friend struct RateSystemBuilder;

  enum class Op : std::uint8_t { konst, slot, time, neg, add, sub, mul, div, exp, ln, step, delay, histint };
  struct Instr {
    Op op;
    std::uint32_t index;
    double value;
  };
  struct Program {
    std::vector<Instr> code;
    std::size_t depth = 0;
  };
  struct Effect {
    std::size_t slot;
    double sign;
    Program amount;
  };
  struct Channel {
    std::size_t source;
    std::size_t target;
    Program rate;
    std::vector<Effect> effects;
  };
  struct HistInt {
    Program inner;
    double over;
  };

  double run(const Program& p, double t, const double* y, const HistoryAccessor* h) const;

  std::string model_name_;
  std::vector<std::string> names_;
  std::size_t n_states_ = 0;
  std::vector<double> initial_;
  double total_ = 0.0;
  std::map<std::string, double> params_;
  Flavor flavor_ = Flavor::ode;
  double step_ = 0.0;
  bool has_history_ = false;
  bool uses_time_ = false;
  std::vector<Channel> channels_;
  std::vector<Program> delayed_;  // inner programs of delay() terms
  std::vector<double> delay_by_;
  std::vector<HistInt> histints_;
  std::vector<std::vector<std::pair<std::size_t, double>>> terms_;  // per state: (channel, sign)
};

/// Compiles a diagram. Throws ModelError for unknown names, history terms in
/// an ode request, or a non-positive difference step.
RateSystem compile_rhs(const StateDiagram& d, const CompileOptions& opts = {});

}  // namespace swarmk
