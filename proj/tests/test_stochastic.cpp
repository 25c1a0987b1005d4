#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "swarmk/analysis.hpp"
#include "swarmk/errors.hpp"
#include "swarmk/models.hpp"
#include "swarmk/parser.hpp"
#include "swarmk/stochastic.hpp"

using namespace swarmk;

namespace {

// One robot, one stick, alpha = 1: grip and release both at rate 1.
RateSystem two_state_chain() {
  StickPullCountsParams p;
  p.robots = 1;
  p.sticks = 1;
  p.alpha = 1.0;
  p.gamma = 1.0;
  return compile_rhs(build_stickpull_counts(p));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double semimarkov_bias(int robots, std::size_t runs) {
  double a = default_stick_alpha();
  int sticks = 2 * robots;
  double scale = a * sticks;
  SemiMarkovParams sp;
  sp.robots = robots;
  sp.sticks = sticks;
  sp.tau = 5.0 / scale;
  RunFunction f = [&](std::uint64_t s) {
    auto r = semimarkov_run(sp, 250.0 / scale, s, 250.0 / scale, 50.0 / scale);
    return std::vector<std::vector<double>>{{r.run.time_average[0] / robots}};
  };
  EnsembleStats st = ensemble({"n"}, {0.0}, f, runs, 99);
  return st.mean[0][0] - steady_state_delayed(0.5, 5.0, 0.35).n;
}

}  // namespace

TEST_SUITE("stochastic") {
  TEST_CASE("exact two-state chain") {
    MasterResult r = master_exact(two_state_chain(), 20.0, 0.5);
    CHECK(r.space.size() == 2);
    double g = r.expectation.column("Ng").back();
    CHECK(g == doctest::Approx(0.5).epsilon(1e-8));
    // P(gripping at t) = (1 - exp(-2t)) / 2 from the empty start.
    for (std::size_t i = 0; i < r.times.size(); ++i)
      CHECK(r.expectation.values[i][1] == doctest::Approx((1 - std::exp(-2 * r.times[i])) / 2).epsilon(1e-8));
  }

  TEST_CASE("exact solver keeps probabilities normalized") {
    for (int n : {1, 4, 10}) {
      StickPullCountsParams p;
      p.robots = n;
      p.sticks = n;
      MasterResult r = master_exact(compile_rhs(build_stickpull_counts(p)), 200.0, 5.0);
      for (const auto& row : r.probabilities) {
        double s = 0.0;
        for (double q : row) {
          s += q;
          CHECK(q >= -1e-12);
        }
        CHECK(std::fabs(s - 1.0) <= 1e-9);
      }
    }
  }

  TEST_CASE("exact solver refusals") {
    CHECK_THROWS_AS(master_exact(compile_rhs(build_stickpull_delayed()), 1.0, 0.1), NumericError);
    StickPullCountsParams p;
    p.robots = 400;
    p.sticks = 400;
    try {
      enumerate_configurations(compile_rhs(build_stickpull_counts(p)), 100);
      FAIL("expected a failure");
    } catch (const NumericError& e) {
      CHECK(e.kind() == NumericErrorKind::state_space_too_large);
    }
  }

  TEST_CASE("exact gap to mean field shrinks with size") {
    double a = default_stick_alpha();
    StickPullParams q;
    q.beta = 1.0;
    Trajectory mf = simulate(compile_rhs(build_stickpull_simple(q)), 20.0, 0.05);
    auto gap = [&](int n) {
      StickPullCountsParams p;
      p.robots = n;
      p.sticks = n;
      double scale = a * n;
      MasterResult r = master_exact(compile_rhs(build_stickpull_counts(p)), 20.0 / scale, 0.05 / scale);
      double g = 0.0;
      for (std::size_t i = 0; i < r.times.size(); ++i) g = std::max(g, std::fabs(r.expectation.values[i][0] / n - mf.values[i][0]));
      return g;
    };
    double g4 = gap(4), g40 = gap(40);
    CHECK(g4 > 0.0);
    CHECK(g40 < g4);
  }

  TEST_CASE("ssa with all rates zero stays put") {
    RateSystem sys = compile_rhs(parse_model({"param k = 0\nstate A = 3\nstate B = 1\nrate(k * A) : A -> B"}));
    StochasticRun r = ssa_run(sys, 10.0, 5, 1.0);
    CHECK(r.events == 0);
    for (const auto& row : r.path.values) CHECK(row == std::vector<double>{3.0, 1.0});
  }

  TEST_CASE("ssa determinism and integer sanity") {
    StickPullCountsParams p;
    p.robots = 6;
    p.sticks = 3;
    p.replace = false;
    RateSystem sys = compile_rhs(build_stickpull_counts(p));
    StochasticRun a = ssa_run(sys, 2000.0, 42, 10.0);
    StochasticRun b = ssa_run(sys, 2000.0, 42, 10.0);
    REQUIRE(a.path.size() == b.path.size());
    for (std::size_t i = 0; i < a.path.size(); ++i) {
      CHECK(std::memcmp(a.path.values[i].data(), b.path.values[i].data(), 3 * sizeof(double)) == 0);
      const auto& v = a.path.values[i];
      CHECK(v[0] >= 0);
      CHECK(v[1] >= 0);
      CHECK(v[0] + v[1] == 6);
      CHECK(v[2] >= 0);
      CHECK(v[2] <= 3);
      for (double x : v) CHECK(x == std::floor(x));
    }
  }

  TEST_CASE("ssa time fraction in the two-state chain") {
    RateSystem sys = two_state_chain();
    RunFunction f = [&](std::uint64_t s) {
      StochasticRun r = ssa_run(sys, 1e4, s, 1e4);
      return std::vector<std::vector<double>>{{r.time_average[1]}};
    };
    EnsembleStats st = ensemble({"g"}, {0.0}, f, 20, 2024);
    CHECK(std::fabs(st.mean[0][0] - 0.5) <= 3 * st.std_error[0][0]);
    CHECK(st.std_error[0][0] > 0.0);
  }

  TEST_CASE("ensemble statistics") {
    StickPullCountsParams p;
    RateSystem sys = compile_rhs(build_stickpull_counts(p));
    std::vector<double> grid = linspace(0.0, 200.0, 21);
    RunFunction f = [&](std::uint64_t s) { return ssa_run(sys, 200.0, s, 10.0).path.values; };

    EnsembleStats same = ensemble_with_seeds(sys.names(), grid, f, {77, 77});
    for (const auto& row : same.std_error)
      for (double e : row) CHECK(e == 0.0);

    EnsembleStats a = ensemble(sys.names(), grid, f, 400, 1);
    EnsembleStats b = ensemble(sys.names(), grid, f, 800, 1);
    std::vector<double> ea, eb;
    for (std::size_t k = 1; k < grid.size(); ++k) {
      ea.push_back(a.std_error[k][0]);
      eb.push_back(b.std_error[k][0]);
    }
    CHECK(median(eb) / median(ea) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.2));
    CHECK_THROWS_AS(ensemble(sys.names(), grid, f, 1, 1), ModelError);
  }

  TEST_CASE("ensemble is independent of parallelism") {
    StickPullCountsParams p;
    RateSystem sys = compile_rhs(build_stickpull_counts(p));
    std::vector<double> grid = linspace(0.0, 100.0, 11);
    RunFunction f = [&](std::uint64_t s) { return ssa_run(sys, 100.0, s, 10.0).path.values; };
    EnsembleStats one = ensemble(sys.names(), grid, f, 64, 5, 1);
    EnsembleStats many = ensemble(sys.names(), grid, f, 64, 5, 8);
    for (std::size_t k = 0; k < grid.size(); ++k)
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::memcmp(&one.mean[k][i], &many.mean[k][i], sizeof(double)) == 0);
        CHECK(std::memcmp(&one.std_error[k][i], &many.std_error[k][i], sizeof(double)) == 0);
      }
  }

  TEST_CASE("run failures carry their index") {
    RunFunction f = [](std::uint64_t s) -> std::vector<std::vector<double>> {
      if (s == run_seed(3, 5)) throw NumericError(NumericErrorKind::non_finite, "bad");
      return {{0.0}};
    };
    try {
      ensemble({"x"}, {0.0}, f, 8, 3);
      FAIL("expected a failure");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("run 5") != std::string::npos);
    }
  }

  TEST_CASE("seed derivation") {
    CHECK(run_seed(1, 0) != run_seed(1, 1));
    CHECK(run_seed(1, 0) != run_seed(2, 0));
    CHECK(run_seed(9, 4) == splitmix64(9 ^ splitmix64(4)));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
      double u = uniform01(rng);
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }

  TEST_CASE("semi-Markov: zero gripping time never shows grippers") {
    SemiMarkovParams p;
    p.tau = 0.0;
    SemiMarkovRun r = semimarkov_run(p, 500.0, 3, 1.0);
    for (const auto& row : r.run.path.values) CHECK(row[1] == 0.0);
  }

  TEST_CASE("semi-Markov: success events restore everyone") {
    SemiMarkovParams p;
    p.robots = 12;
    p.sticks = 8;
    p.tau = 40.0;
    p.log_events = true;
    SemiMarkovRun r = semimarkov_run(p, 3000.0, 17, 10.0);
    int successes = 0, grips = 0, releases = 0;
    int searching = p.robots, gripping = 0;
    for (const auto& e : r.events) {
      switch (e.kind) {
        case AgentEventKind::grip:
          ++grips;
          CHECK(e.searching_after == searching - 1);
          CHECK(e.gripping_after == gripping + 1);
          break;
        case AgentEventKind::success:
          ++successes;
          CHECK(e.helper >= 0);
          CHECK(e.helper != e.agent);
          CHECK(e.searching_after == searching + 1);
          CHECK(e.gripping_after == gripping - 1);
          CHECK(e.sticks_after == p.sticks);
          break;
        case AgentEventKind::release:
          ++releases;
          CHECK(e.searching_after == searching + 1);
          CHECK(e.gripping_after == gripping - 1);
          break;
      }
      searching = e.searching_after;
      gripping = e.gripping_after;
      CHECK(searching + gripping == p.robots);
    }
    CHECK(successes > 0);
    CHECK(releases > 0);
    CHECK(grips == successes + releases + gripping);
  }

  TEST_CASE("semi-Markov determinism") {
    SemiMarkovParams p;
    p.tau = 30.0;
    auto a = semimarkov_run(p, 1000.0, 8, 5.0);
    auto b = semimarkov_run(p, 1000.0, 8, 5.0);
    CHECK(a.run.path.values == b.run.path.values);
    CHECK(a.run.events == b.run.events);
  }

  TEST_CASE("property: agent simulator approaches the delayed root as the group grows") {
    double small = semimarkov_bias(10, 400);
    double large = semimarkov_bias(80, 100);
    CHECK(std::fabs(large) < std::fabs(small));
    CHECK(std::fabs(small) < 0.05);
  }
}
