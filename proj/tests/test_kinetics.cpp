#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "swarmk/analysis.hpp"
#include "swarmk/errors.hpp"
#include "swarmk/models.hpp"
#include "swarmk/parser.hpp"
#include "swarmk/rate_system.hpp"

using namespace swarmk;

namespace {

bool has_defect(const ValidationReport& r, const std::string& text) {
  for (const auto& d : r.defects)
    if (d.message.find(text) != std::string::npos) return true;
  return false;
}

// Random admissible point: states sum to the conserved total, counters in [0, scale].
std::vector<double> random_point(const RateSystem& sys, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> y(sys.dimension());
  double s = 0.0;
  for (std::size_t k = 0; k < sys.state_count(); ++k) s += (y[k] = u(rng));
  for (std::size_t k = 0; k < sys.state_count(); ++k) y[k] *= sys.total() / s;
  for (std::size_t k = sys.state_count(); k < y.size(); ++k) y[k] = u(rng) * std::max(1.0, sys.initial()[k]);
  return y;
}

// History that returns the same values at every past time.
class FrozenHistory : public HistoryAccessor {
 public:
  FrozenHistory(const RateSystem& sys, std::vector<double> y) : sys_(sys), y_(std::move(y)) {}
  void state_at(double, double* out) const override { std::copy(y_.begin(), y_.end(), out); }
  double integral(std::size_t slot, double from, double to, double) const override {
    std::vector<double> g(sys_.histint_count());
    sys_.histint_integrands(to, y_.data(), g.data());
    return g[slot] * (to - from);
  }

 private:
  const RateSystem& sys_;
  std::vector<double> y_;
};

}  // namespace

TEST_SUITE("kinetics") {
  TEST_CASE("validation") {
    CHECK(validate_diagram(parse_model({"state S = 5"})).ok());

    StateDiagram bad = parse_model({"state S = 1\nstate G = 0\nrate(S) : S -> G"});
    bad.transitions[0].rate = var("N_x") * var("S");
    ValidationReport r = validate_diagram(bad);
    CHECK_FALSE(r.ok());
    CHECK(has_defect(r, "unknown identifier N_x"));

    StateDiagram neg = parse_model({"state S = -1\nstate G = 2"});
    CHECK(has_defect(validate_diagram(neg), "negative"));

    StateDiagram pinned = parse_model({"state S = 1\nstate G = 2"});
    pinned.declared_total = 4.0;
    CHECK_FALSE(validate_diagram(pinned).ok());

    StateDiagram sp = build_stickpull_simple();
    CHECK(validate_diagram(sp).ok());
    CHECK(sp.states.size() == 2);
    CHECK(sp.transitions.size() == 3);
  }

  TEST_CASE("negative sampled rates are warnings") {
    StateDiagram d = parse_model({"param k = 1\nstate S = 1\nstate G = 0\nrate(k * (S - 0.5)) : S -> G"});
    ValidationReport r = validate_diagram(d);
    CHECK(r.ok());
    CHECK_FALSE(r.warnings.empty());
  }

  TEST_CASE("compiled stick-pulling derivative") {
    RateSystem sys = compile_rhs(build_stickpull_simple());
    CHECK(sys.derivative(0.0, {1.0, 0.0, 1.0})[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(sys.derivative(0.0, {0.0, 1.0, 1.0})[0] == doctest::Approx(0.2).epsilon(1e-15));
    double n = steady_state_simple(0.5, 0.2, 0.35).n;
    CHECK(std::fabs(sys.derivative(0.0, {n, 1.0 - n, 1.0})[0]) < 1e-10);
  }

  TEST_CASE("conserved totals") {
    ConservedTotal sp = conserved_total(build_stickpull_simple());
    CHECK(sp.total == 1.0);
    CHECK(sp.states == std::vector<std::string>{"n", "g"});
    ConservedTotal fg = conserved_total(build_foraging());
    CHECK(fg.total == 5.0);
    CHECK(fg.states == std::vector<std::string>{"Ns", "Nh", "Nas", "Nah"});
    CHECK(conserved_total(parse_model({"state S = 7"})).total == 7.0);
  }

  TEST_CASE("encounter rate") {
    double a = encounter_rate(8.0, 14.0, 40.0);
    CHECK(a == doctest::Approx(8.0 * 14.0 / (M_PI * 1600.0)).epsilon(1e-15));
    CHECK(encounter_rate(4.0, 14.0, 40.0) == doctest::Approx(a / 2).epsilon(1e-15));
    CHECK(encounter_rate(8.0, 14.0, 80.0) == doctest::Approx(a / 4).epsilon(1e-15));
    CHECK_THROWS_AS(encounter_rate(0.0, 14.0, 40.0), std::domain_error);
    CHECK_THROWS_AS(encounter_rate(8.0, -1.0, 40.0), std::domain_error);
  }

  TEST_CASE("ode request with history is rejected") {
    CompileOptions o;
    o.flavor = Flavor::ode;
    CHECK_THROWS_AS(compile_rhs(build_stickpull_delayed(), o), ModelError);
    CHECK(compile_rhs(build_stickpull_delayed()).flavor() == Flavor::dde);
    CHECK(compile_rhs(build_stickpull_simple()).flavor() == Flavor::ode);
  }

  TEST_CASE("division by zero in a rate") {
    RateSystem sys = compile_rhs(parse_model({"state S = 1\nstate G = 0\nrate(S / G) : S -> G"}));
    CHECK_THROWS_AS(sys.derivative(0.0, sys.initial()), NumericError);
  }

  TEST_CASE("property: derivatives of conserved states sum to zero") {
    std::mt19937_64 rng(7);
    for (const auto& b : builtin_models()) {
      CAPTURE(b.name);
      LoadedModel m = load_model(b.name);
      RateSystem sys = compile_loaded(m, {});
      for (int trial = 0; trial < 200; ++trial) {
        auto y = random_point(sys, rng);
        FrozenHistory h(sys, y);
        auto dy = sys.derivative(50.0, y, &h);
        double sum = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < sys.state_count(); ++k) {
          sum += dy[k];
          scale += std::fabs(dy[k]);
        }
        CHECK(std::fabs(sum) <= 1e-12 * std::max(scale, 1e-300));
      }
    }
  }

  TEST_CASE("property: one signed term per incident transition") {
    for (const auto& b : builtin_models()) {
      CAPTURE(b.name);
      StateDiagram d = b.build();
      RateSystem sys = compile_loaded(load_model(b.name), {});
      for (std::size_t k = 0; k < d.states.size(); ++k) {
        std::size_t incident = 0;
        for (const auto& tr : d.transitions) {
          if (tr.source == tr.target) continue;
          if (tr.source == d.states[k].name) ++incident;
          if (tr.target == d.states[k].name) ++incident;
        }
        CHECK(sys.terms_for_state(k) == incident);
      }
    }
  }

  TEST_CASE("property: two compilations agree bit for bit") {
    std::mt19937_64 rng(11);
    for (const auto& b : builtin_models()) {
      RateSystem a = compile_loaded(load_model(b.name), {});
      RateSystem c = compile_loaded(load_model(b.name), {});
      for (int trial = 0; trial < 50; ++trial) {
        auto y = random_point(a, rng);
        FrozenHistory h(a, y);
        auto da = a.derivative(3.0, y, &h);
        auto dc = c.derivative(3.0, y, &h);
        CHECK(std::memcmp(da.data(), dc.data(), da.size() * sizeof(double)) == 0);
      }
    }
  }

  TEST_CASE("overrides") {
    StateDiagram d = with_overrides(build_stickpull_simple(), {{"beta", 0.8}});
    CHECK(resolve_params(d).at("bt") == doctest::Approx(0.28));
    CHECK_THROWS_AS(with_overrides(d, {{"nope", 1.0}}), ModelError);
    CHECK_THROWS_AS(resolve_params(parse_model({"param a = b\nparam b = a"})), ModelError);
  }
}
