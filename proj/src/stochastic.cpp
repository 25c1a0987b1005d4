#include "swarmk/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "swarmk/errors.hpp"
#include "swarmk/models.hpp"
#include "swarmk/parallel.hpp"

namespace swarmk {

void CompensatedSum::add(double x) {
  double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) c_ += (sum_ - t) + x; else c_ += (x - t) + sum_;
  sum_ = t;
}

namespace {

// RK4 step of the master equation as a fraction of the fastest exit time;
// keeps the truncation error near 1e-9 over the run.
constexpr double kMasterStepFraction = 0.02;

void require_markov(const RateSystem& sys) {
  if (sys.has_history()) throw NumericError(NumericErrorKind::unsupported, "stochastic engines need a memoryless model (no delay or histint)");
  if (sys.depends_on_time()) throw NumericError(NumericErrorKind::unsupported, "stochastic engines need time-independent rates");
}

std::vector<long long> integral_vector(const std::vector<double>& v, const char* what) {
  std::vector<long long> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double r = std::round(v[i]);
    if (std::fabs(v[i] - r) > 1e-9) {
      std::ostringstream os;
      os << what << " must be integral, got " << v[i];
      throw ModelError(os.str());
    }
    out[i] = static_cast<long long>(r);
  }
  return out;
}

std::vector<double> to_doubles(const std::vector<long long>& v) { return {v.begin(), v.end()}; }

void check_rate(double r, double t) {
  if (!std::isfinite(r)) throw NumericError(NumericErrorKind::non_finite, "transition rate is not finite", t);
  if (r < 0.0) throw NumericError(NumericErrorKind::unsupported, "transition rate is negative at an integer configuration", t);
}

std::size_t grid_count(double t_end, double dt_out) {
  if (!(dt_out > 0.0)) throw ModelError("output step must be positive");
  if (!(t_end >= 0.0)) throw ModelError("t_end must be non-negative");
  return static_cast<std::size_t>(std::ceil(t_end / dt_out - 1e-9));
}

// Records a piecewise-constant path on the output grid and its time average.
class Recorder {
 public:
  Recorder(std::vector<std::string> names, double t_end, double dt_out, double average_from)
      : t_end_(t_end), dt_(dt_out), from_(average_from), last_(grid_count(t_end, dt_out)), sums_(names.size()) {
    run_.path.names = std::move(names);
    run_.path.dt = dt_out;
  }

  // The state `y` holds on [t, to).
  void hold(double t, double to, const std::vector<double>& y) {
    double a = std::max(t, from_);
    double b = std::min(to, t_end_);
    if (b > a)
      for (std::size_t i = 0; i < y.size(); ++i) sums_[i].add(y[i] * (b - a));
    bool final = to >= t_end_;
    while (next_ <= last_) {
      double g = std::min(static_cast<double>(next_) * dt_, t_end_);
      if (g < to || (final && g <= to)) {
        run_.path.times.push_back(g);
        run_.path.values.push_back(y);
        ++next_;
      } else {
        break;
      }
    }
  }

  StochasticRun finish(std::size_t events) {
    double span = t_end_ - std::min(from_, t_end_);
    for (auto& s : sums_) run_.time_average.push_back(span > 0.0 ? s.value() / span : 0.0);
    run_.events = events;
    return std::move(run_);
  }

 private:
  double t_end_;
  double dt_;
  double from_;
  std::size_t last_;
  std::size_t next_ = 0;
  std::vector<CompensatedSum> sums_;
  StochasticRun run_;
};

}  // namespace

ConfigurationSpace enumerate_configurations(const RateSystem& sys, std::size_t cap) {
  require_markov(sys);
  ConfigurationSpace space;
  space.names = sys.names();
  std::map<std::vector<long long>, std::size_t> index;
  std::deque<std::vector<long long>> queue;
  auto start = integral_vector(sys.initial(), "initial configuration");
  index[start] = 0;
  space.configs.push_back(to_doubles(start));
  queue.push_back(start);
  std::vector<double> flows(sys.transition_count()), delta(sys.dimension());
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    std::size_t from = index.at(cur);
    std::vector<double> y = to_doubles(cur);
    sys.flows(0.0, y.data(), nullptr, flows.data());
    for (std::size_t j = 0; j < flows.size(); ++j) {
      check_rate(flows[j], 0.0);
      if (flows[j] == 0.0) continue;
      sys.jump(j, 0.0, y.data(), delta.data());
      auto step = integral_vector(delta, "transition increments");
      std::vector<long long> next = cur;
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += step[i];
      for (std::size_t i = 0; i < sys.state_count(); ++i)
        if (next[i] < 0) throw NumericError(NumericErrorKind::negative_population, "a positive rate leads to a negative count");
      auto [it, inserted] = index.emplace(next, space.configs.size());
      if (inserted) {
        if (space.configs.size() >= cap) {
          std::ostringstream os;
          os << "more than " << cap << " reachable configurations";
          throw NumericError(NumericErrorKind::state_space_too_large, os.str());
        }
        space.configs.push_back(to_doubles(next));
        queue.push_back(next);
      }
      if (it->second != from) space.edges.push_back({from, it->second, flows[j]});
    }
  }
  return space;
}

MasterResult master_exact(const RateSystem& sys, double t_end, double dt_out) {
  MasterResult res;
  res.space = enumerate_configurations(sys);
  const auto& sp = res.space;
  std::size_t n = sp.size();
  std::vector<double> exit(n, 0.0);
  for (const auto& e : sp.edges) exit[e.from] += e.rate;
  double max_exit = n ? *std::max_element(exit.begin(), exit.end()) : 0.0;
  std::size_t outputs = grid_count(t_end, dt_out);
  double h = max_exit > 0.0 ? std::min(dt_out, kMasterStepFraction / max_exit) : dt_out;
  auto sub = static_cast<std::size_t>(std::ceil(dt_out / h - 1e-9));
  h = dt_out / static_cast<double>(sub);

  auto rhs = [&](const std::vector<double>& p, std::vector<double>& dp) {
    for (std::size_t i = 0; i < n; ++i) dp[i] = -exit[i] * p[i];
    for (const auto& e : sp.edges) dp[e.to] += e.rate * p[e.from];
  };

  std::vector<double> p(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);
  p[0] = 1.0;
  Trajectory& ex = res.expectation;
  ex.model = sys.model_name();
  ex.params = sys.params();
  ex.dt = dt_out;
  ex.names = sp.names;
  auto record = [&](double t) {
    double total = 0.0;
    for (double v : p) total += v;
    if (std::fabs(total - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "probability mass drifted to " << total;
      throw NumericError(NumericErrorKind::conservation_drift, os.str(), t);
    }
    std::vector<double> mean(sp.names.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[i] * sp.configs[i][c];
    res.times.push_back(t);
    res.probabilities.push_back(p);
    ex.times.push_back(t);
    ex.values.push_back(mean);
  };
  record(0.0);
  for (std::size_t k = 0; k < outputs; ++k) {
    for (std::size_t s = 0; s < sub; ++s) {
      rhs(p, k1);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
      rhs(tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
      rhs(tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + h * k3[i];
      rhs(tmp, k4);
      for (std::size_t i = 0; i < n; ++i) p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    record(static_cast<double>(k + 1) * dt_out);
  }
  return res;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double exponential(std::mt19937_64& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t index) { return splitmix64(master_seed ^ splitmix64(index)); }

StochasticRun ssa_run(const RateSystem& sys, double t_end, std::uint64_t seed, double dt_out, double average_from) {
  require_markov(sys);
  std::mt19937_64 rng(seed);
  std::vector<double> y = to_doubles(integral_vector(sys.initial(), "initial configuration"));
  std::vector<double> flows(sys.transition_count()), delta(sys.dimension());
  Recorder rec(sys.names(), t_end, dt_out, average_from);
  double t = 0.0;
  std::size_t events = 0;
  for (;;) {
    sys.flows(t, y.data(), nullptr, flows.data());
    double total = 0.0;
    for (double f : flows) {
      check_rate(f, t);
      total += f;
    }
    double next = total > 0.0 ? t + exponential(rng, total) : std::numeric_limits<double>::infinity();
    if (next >= t_end) {
      rec.hold(t, t_end, y);
      break;
    }
    rec.hold(t, next, y);
    double u = uniform01(rng) * total;
    std::size_t j = 0;
    double acc = flows[0];
    while (acc <= u && j + 1 < flows.size()) acc += flows[++j];
    while (flows[j] == 0.0 && j > 0) --j;  // guard against rounding past the last positive rate
    sys.jump(j, next, y.data(), delta.data());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += std::round(delta[i]);
    t = next;
    ++events;
  }
  auto run = rec.finish(events);
  run.path.model = sys.model_name();
  run.path.params = sys.params();
  return run;
}

SemiMarkovRun semimarkov_run(const SemiMarkovParams& p, double t_end, std::uint64_t seed, double dt_out, double average_from) {
  if (p.robots < 0 || p.sticks < 0) throw ModelError("robot and stick counts must be non-negative");
  if (!(p.tau >= 0.0)) throw ModelError("gripping time must be non-negative");
  double alpha = p.alpha > 0.0 ? p.alpha : default_stick_alpha();
  double alphat = p.alphat > 0.0 ? p.alphat : 0.35 * alpha;
  std::mt19937_64 rng(seed);
  std::vector<int> searching(static_cast<std::size_t>(p.robots));
  for (int i = 0; i < p.robots; ++i) searching[static_cast<std::size_t>(i)] = i;
  std::vector<int> gripping;
  std::vector<double> expiry(static_cast<std::size_t>(p.robots), 0.0);
  int sticks = p.sticks;
  SemiMarkovRun out;
  Recorder rec({"Ns", "Ng", "M"}, t_end, dt_out, average_from);
  auto counts = [&] {
    return std::vector<double>{static_cast<double>(searching.size()), static_cast<double>(gripping.size()), static_cast<double>(sticks)};
  };
  auto log = [&](double t, AgentEventKind k, int agent, int helper) {
    if (p.log_events)
      out.events.push_back({t, k, agent, helper, static_cast<int>(searching.size()), static_cast<int>(gripping.size()), sticks});
  };
  auto pick = [&](std::size_t size) { return std::min(size - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(size))); };

  double t = 0.0;
  std::size_t events = 0;
  for (;;) {
    double ns = static_cast<double>(searching.size());
    double ng = static_cast<double>(gripping.size());
    double free = static_cast<double>(sticks) - ng;
    double r_grip = alpha * ns * std::max(free, 0.0);
    double r_help = alphat * ns * ng;
    double total = r_grip + r_help;
    double next = total > 0.0 ? t + exponential(rng, total) : std::numeric_limits<double>::infinity();
    std::size_t first = 0;
    double t_exp = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gripping.size(); ++g) {
      double e = expiry[static_cast<std::size_t>(gripping[g])];
      if (e < t_exp) {
        t_exp = e;
        first = g;
      }
    }
    if (t_exp <= next && t_exp < t_end) {
      // Timer ran out: unaided release (the draw is discarded; rates are memoryless).
      rec.hold(t, t_exp, counts());
      t = t_exp;
      int agent = gripping[first];
      gripping.erase(gripping.begin() + static_cast<std::ptrdiff_t>(first));
      searching.push_back(agent);
      log(t, AgentEventKind::release, agent, -1);
      ++events;
      continue;
    }
    if (next >= t_end) {
      rec.hold(t, t_end, counts());
      break;
    }
    rec.hold(t, next, counts());
    t = next;
    ++events;
    if (uniform01(rng) * total < r_grip) {
      std::size_t s = pick(searching.size());
      int agent = searching[s];
      if (p.tau == 0.0) {
        log(t, AgentEventKind::grip, agent, -1);
        log(t, AgentEventKind::release, agent, -1);
        continue;
      }
      searching.erase(searching.begin() + static_cast<std::ptrdiff_t>(s));
      gripping.push_back(agent);
      expiry[static_cast<std::size_t>(agent)] = t + p.tau;
      log(t, AgentEventKind::grip, agent, -1);
    } else {
      std::size_t h = pick(searching.size());
      std::size_t g = pick(gripping.size());
      int helper = searching[h];
      int agent = gripping[g];
      gripping.erase(gripping.begin() + static_cast<std::ptrdiff_t>(g));
      searching.push_back(agent);
      if (!p.replace) --sticks;
      log(t, AgentEventKind::success, agent, helper);
    }
  }
  out.run = rec.finish(events);
  out.run.path.model = "stickpull-agents";
  out.run.path.params = {{"robots", p.robots}, {"sticks", p.sticks}, {"alpha", alpha}, {"alphat", alphat}, {"tau", p.tau}};
  return out;
}

EnsembleStats ensemble_with_seeds(const std::vector<std::string>& names, const std::vector<double>& times, const RunFunction& run,
                                  const std::vector<std::uint64_t>& seeds, std::size_t threads) {
  if (seeds.size() < 2) throw ModelError("an ensemble needs at least 2 runs");
  std::vector<std::vector<std::vector<double>>> results(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    try {
      results[i] = run(seeds[i]);
    } catch (const NumericError& e) {
      throw NumericError(e.kind(), "run " + std::to_string(i) + ": " + e.what(), e.time());
    } catch (const ModelError& e) {
      throw ModelError("run " + std::to_string(i) + ": " + e.what());
    }
    if (results[i].size() != times.size()) throw ModelError("run " + std::to_string(i) + " returned the wrong number of samples");
    for (const auto& row : results[i])
      if (row.size() != names.size()) throw ModelError("run " + std::to_string(i) + " returned the wrong number of components");
  });
  EnsembleStats st;
  st.names = names;
  st.times = times;
  st.runs = seeds.size();
  double n = static_cast<double>(seeds.size());
  st.mean.assign(times.size(), std::vector<double>(names.size()));
  st.std_error.assign(times.size(), std::vector<double>(names.size()));
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      CompensatedSum s;
      for (const auto& r : results) s.add(r[k][c]);
      double mean = s.value() / n;
      CompensatedSum sq;
      for (const auto& r : results) sq.add((r[k][c] - mean) * (r[k][c] - mean));
      st.mean[k][c] = mean;
      st.std_error[k][c] = std::sqrt(sq.value() / (n - 1.0) / n);
    }
  }
  return st;
}

EnsembleStats ensemble(const std::vector<std::string>& names, const std::vector<double>& times, const RunFunction& run,
                       std::size_t n_runs, std::uint64_t master_seed, std::size_t threads) {
  std::vector<std::uint64_t> seeds(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) seeds[i] = run_seed(master_seed, i);
  EnsembleStats st = ensemble_with_seeds(names, times, run, seeds, threads);
  st.master_seed = master_seed;
  return st;
}

}  // namespace swarmk
