#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmk/expr.hpp"

namespace swarmk {

/// A named declaration: a parameter, an agent state or an environment counter.
/// For states and environment counters `value` is the initial value.
struct Declaration {
  std::string name;
  Expr value;
  SourceLoc loc;
};

/// Increment applied to an environment counter per unit of transition flow.
struct EnvEffect {
  std::string env;
  bool subtract = false;  // "-=" rather than "+="
  Expr amount;
  SourceLoc loc;
};

enum class TransitionKind { memoryless, delayed };

struct Transition {
  std::string source;
  std::string target;  // equal to source for pure environment effects
  Expr rate;           // flow per unit time
  std::vector<EnvEffect> effects;
  SourceLoc loc;

  TransitionKind kind() const;
};

/// Macroscopic state diagram: every state becomes a dynamic variable, every
/// transition a flow term leaving its source and entering its target.
///
/// The conserved total N0 is the sum of the initial state counts, unless
/// `declared_total` pins it explicitly (validation then checks the two agree).
struct StateDiagram {
  std::string name;
  std::vector<Declaration> params;
  std::vector<Declaration> states;
  std::vector<Declaration> envs;
  std::vector<Transition> transitions;
  std::optional<double> declared_total;

  const Declaration* find_param(const std::string& n) const;
  const Declaration* find_state(const std::string& n) const;
  const Declaration* find_env(const std::string& n) const;
};

/// Names that can never be declared.
bool is_reserved_word(const std::string& name);

/// Evaluates every parameter in dependency order. Throws ModelError on unknown
/// names or cyclic definitions.
std::map<std::string, double> resolve_params(const StateDiagram& d);

/// Initial values of states followed by environment counters.
std::vector<double> initial_values(const StateDiagram& d);

/// Copy of d with the named parameters replaced by literals. Unknown names throw.
StateDiagram with_overrides(const StateDiagram& d, const std::map<std::string, double>& overrides);

struct ConservedTotal {
  double total = 0.0;
  std::vector<std::string> states;
};

ConservedTotal conserved_total(const StateDiagram& d);

struct Defect {
  std::string message;
  SourceLoc loc;
};

struct ValidationReport {
  std::vector<Defect> defects;
  /// Non-fatal findings (e.g. a rate that went negative at a sampled point).
  std::vector<Defect> warnings;

  bool ok() const { return defects.empty(); }
};

ValidationReport validate_diagram(const StateDiagram& d);

/// Renders d as model-language source; parse_model of the result yields a
/// structurally equal diagram.
std::string to_source(const StateDiagram& d);

/// Equality of declarations and transitions, ignoring names and locations.
bool structurally_equal(const StateDiagram& a, const StateDiagram& b);

/// Same states and same (source, target) transition multiset, rates ignored.
bool same_topology(const StateDiagram& a, const StateDiagram& b);

/// Rate at which a robot sweeping a disc arena finds a point-like object:
/// speed * detection_width / (pi * radius^2). All arguments must be positive.
double encounter_rate(double speed, double detection_width, double arena_radius);

}  // namespace swarmk
