#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "swarmk/analysis.hpp"
#include "swarmk/integrators.hpp"
#include "swarmk/models.hpp"
#include "swarmk/parser.hpp"

using namespace swarmk;

TEST_SUITE("models") {
  TEST_CASE("every builder validates") {
    for (const auto& b : builtin_models()) {
      CAPTURE(b.name);
      ValidationReport r = validate_diagram(b.build());
      CHECK(r.ok());
    }
  }

  TEST_CASE("foraging shape: searchers dip then recover, pucks run out") {
    RateSystem sys = compile_rhs(build_foraging());
    Trajectory tr = simulate(sys, 2000.0, 0.05);
    auto ns = tr.column("Ns");
    auto m = tr.column("M");
    std::size_t low = std::min_element(ns.begin(), ns.end()) - ns.begin();
    CHECK(low > 0);
    CHECK(ns[low] < ns[0] - 0.5);
    CHECK(ns.back() > ns[low] + 0.5);
    for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i] < m[i - 1]);
    CHECK(m.back() < 1.0);
  }

  TEST_CASE("foraging derived durations") {
    ForagingParams p;
    p.robots = 5;
    auto params = resolve_params(build_foraging(p));
    CHECK(params.at("tau") == doctest::Approx(3.0 + 0.2 * 4));
    CHECK(params.at("tau_h") == doctest::Approx(16.0 * (1 + 0.08 * 3.8 * 5)));
  }

  TEST_CASE("single forager without interference runs a closed workflow") {
    ForagingParams p;
    p.robots = 1;
    p.alpha_r = 0.0;
    p.alpha_rh = 0.0;
    RateSystem sys = compile_rhs(build_foraging(p));
    Trajectory tr = simulate(sys, 3000.0, 0.05);
    CHECK(tr.column("Nas").back() == 0.0);
    CHECK(tr.column("Nah").back() == 0.0);
    CHECK(tr.column("M").back() < 1.0);
  }

  TEST_CASE("stick pulling in depletion mode") {
    StickPullParams p;
    p.replace = false;
    RateSystem sys = compile_rhs(build_stickpull_simple(p));
    Trajectory tr = simulate(sys, 100.0, 0.01);
    auto m = tr.column("m");
    for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i] <= m[i - 1]);
    CHECK(m.back() < m.front());
  }

  TEST_CASE("delayed stick pulling above the critical ratio keeps searchers") {
    StickPullParams p;
    p.beta = 1.5;
    p.tau = 50.0;
    RateSystem sys = compile_rhs(build_stickpull_delayed(p));
    Trajectory tr = simulate(sys, 600.0, 0.01);
    SteadyValue s = steady_value(tr, "n");
    CHECK(s.value > 0.05);
    CHECK(s.value == doctest::Approx(steady_state_delayed(1.5, 50.0, 0.35).n).epsilon(1e-2));
  }

  TEST_CASE("simplified and delayed stick pulling share a topology") {
    CHECK(same_topology(build_stickpull_simple(), build_stickpull_delayed()));
    CHECK_FALSE(structurally_equal(build_stickpull_simple(), build_stickpull_delayed()));
  }

  TEST_CASE("sugawara states and delivery counter") {
    StateDiagram d = build_sugawara();
    CHECK(d.states.size() == 5);
    CHECK(conserved_total(d).total == 8.0);
    RateSystem sys = compile_rhs(d);
    Trajectory tr = simulate(sys, 500.0, 0.01);
    auto del = tr.column("delivered");
    for (std::size_t i = 1; i < del.size(); ++i) CHECK(del[i] >= del[i - 1]);
    CHECK(del.back() > 0.0);
  }

  TEST_CASE("collab difference: idle without encounters") {
    auto m = load_model("collab-difference");
    RateSystem sys = compile_loaded(m, {{"alpha", 0}, {"alphat", 0}, {"alpha_w", 0}, {"alpha_r", 0}});
    Trajectory tr = simulate(sys, 200.0, 1.0);
    for (double v : tr.column("Ns")) CHECK(v == 6.0);
  }

  TEST_CASE("collab difference conserves robots at every step") {
    auto m = load_model("collab-difference");
    RateSystem sys = compile_loaded(m, {});
    Trajectory tr = simulate(sys, 1000.0, 1.0);
    CHECK(max_conservation_drift(tr, sys.state_count(), 6.0) < 1e-9 * 6.0);
    auto pulled = tr.column("pulled");
    CHECK(pulled.back() > 0.0);
    for (const auto& row : tr.values)
      for (std::size_t k = 0; k < sys.state_count(); ++k) CHECK(row[k] >= -1e-9);
  }

  TEST_CASE("collab difference with a finer step approaches the delayed model") {
    // Same model compiled as a delay system is the dt -> 0 limit.
    auto m = load_model("collab-difference");
    StateDiagram d = with_overrides(m.diagram, {{"dt", 0.001}});
    RateSystem dde = compile_rhs(d);
    Trajectory ref = simulate(dde, 100.0, 0.01, 100);
    std::vector<double> gaps;
    for (double h : {1.0, 0.5, 0.25}) {
      RateSystem sys = compile_loaded(m, {}, h);
      Trajectory tr = simulate(sys, 100.0, h, static_cast<std::size_t>(std::llround(1.0 / h)));
      REQUIRE(tr.size() == ref.size());
      double g = 0.0;
      for (std::size_t i = 0; i < tr.size(); ++i) g = std::max(g, std::fabs(tr.values[i][0] - ref.values[i][0]));
      gaps.push_back(g);
    }
    CHECK(gaps[1] < gaps[0]);
    CHECK(gaps[2] < gaps[1]);
    CHECK(gaps[0] / gaps[1] == doctest::Approx(2.0).epsilon(0.35));
    CHECK(gaps[1] / gaps[2] == doctest::Approx(2.0).epsilon(0.35));
  }

  TEST_CASE("property: conservation on every builtin at dt = 0.01") {
    for (const auto& b : builtin_models()) {
      CAPTURE(b.name);
      LoadedModel m = load_model(b.name);
      RateSystem sys = compile_loaded(m, {});
      double horizon = b.difference ? b.t_end : std::min(b.t_end, 200.0);
      Trajectory tr = simulate(sys, horizon, b.difference ? 1.0 : 0.01);
      CHECK(max_conservation_drift(tr, sys.state_count(), sys.total()) <= 1e-9 * sys.total());
    }
  }

  TEST_CASE("load_model by path inherits builtin defaults") {
    LoadedModel m = load_model(std::string(SWARMK_MODELS_DIR) + "/collab-difference.mas");
    CHECK(m.difference);
    CHECK(m.completion_counter == "pulled");
    CHECK_THROWS_AS(load_model("no-such-model"), ModelError);
  }
}
