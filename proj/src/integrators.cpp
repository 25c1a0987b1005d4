#include "swarmk/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace swarmk {

std::vector<double> Trajectory::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ModelError("trajectory has no column " + name);
  std::size_t j = static_cast<std::size_t>(it - names.begin());
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(v[j]);
  return out;
}

namespace {

constexpr double kDriftTol = 1e-6;
constexpr double kNegativeTol = 1e-9;
constexpr double kGridSnap = 1e-9;

std::size_t step_count(double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ModelError("t_end must be non-negative");
  return static_cast<std::size_t>(std::ceil(t_end / dt - kGridSnap));
}

// Whole number of steps in w, or throws DelayMisaligned.
std::size_t aligned_steps(double w, double dt) {
  double q = w / dt;
  double r = std::round(q);
  if (std::fabs(q - r) > 1e-9 * std::max(1.0, q) || r < 1.0) {
    std::ostringstream os;
    os << "delay " << w << " is not a whole number of steps of " << dt;
    throw NumericError(NumericErrorKind::delay_misaligned, os.str());
  }
  return static_cast<std::size_t>(r);
}

class Monitor {
 public:
  explicit Monitor(const RateSystem& sys) : n_(sys.state_count()), total_(sys.total()), scale_(std::max(1.0, sys.total())) {}

  void check(double t, std::vector<double>& y) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!std::isfinite(y[i])) throw NumericError(NumericErrorKind::non_finite, "value became non-finite", t);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      if (y[i] < -kNegativeTol * scale_) {
        std::ostringstream os;
        os << "population " << i << " fell to " << y[i] << "; reduce the step size";
        throw NumericError(NumericErrorKind::negative_population, os.str(), t);
      }
      sum += y[i];
    }
    if (n_ > 0 && std::fabs(sum - total_) > kDriftTol * scale_) {
      std::ostringstream os;
      os << "state total drifted to " << sum << " from " << total_;
      throw NumericError(NumericErrorKind::conservation_drift, os.str(), t);
    }
  }

  // Reported copy: tolerated small negatives shown as 0.
  std::vector<double> report(const std::vector<double>& y) const {
    std::vector<double> out = y;
    for (std::size_t i = 0; i < n_; ++i)
      if (out[i] < 0.0) out[i] = 0.0;
    return out;
  }

 private:
  std::size_t n_;
  double total_;
  double scale_;
};

void check_derivative(double t, const std::vector<double>& dy) {
  for (double v : dy)
    if (!std::isfinite(v)) throw NumericError(NumericErrorKind::non_finite, "derivative became non-finite", t);
}

Trajectory start(const RateSystem& sys, const std::vector<double>& init, double dt) {
  if (init.size() != sys.dimension()) throw ModelError("initial vector has wrong dimension");
  Trajectory tr;
  tr.model = sys.model_name();
  tr.params = sys.params();
  tr.dt = dt;
  tr.flavor = sys.flavor();
  tr.names = sys.names();
  return tr;
}

// Accepted grid samples over the last `cap` steps. Index 0 is t = 0.
class Ring {
 public:
  Ring(std::size_t cap, std::size_t width) : cap_(cap), width_(width), data_(cap * width) {}

  void push(const double* v) {
    std::copy(v, v + width_, data_.begin() + static_cast<std::ptrdiff_t>((count_ % cap_) * width_));
    ++count_;
  }
  std::size_t count() const { return count_; }
  const double* get(std::size_t k, double t) const {
    if (k >= count_ || count_ - k > cap_) throw NumericError(NumericErrorKind::missing_history, "history query outside the stored window", t);
    return data_.data() + (k % cap_) * width_;
  }

 private:
  std::size_t cap_;
  std::size_t width_;
  std::size_t count_ = 0;
  std::vector<double> data_;
};

// Continuous history for the method of steps: linear interpolation of the
// state between grid points, trapezoid integrals of histint integrands.
class GridHistory : public HistoryAccessor {
 public:
  GridHistory(const RateSystem& sys, double dt, std::size_t window_steps)
      : sys_(sys), dt_(dt), dim_(sys.dimension()), nh_(sys.histint_count()),
        states_(window_steps + 3, sys.dimension()), integrands_(window_steps + 3, std::max<std::size_t>(1, nh_)),
        cumulative_(window_steps + 3, std::max<std::size_t>(1, nh_)) {}

  void accept(double t, const std::vector<double>& y) {
    std::vector<double> g(std::max<std::size_t>(1, nh_), 0.0);
    if (nh_ > 0) sys_.histint_integrands(t, y.data(), g.data());
    std::vector<double> c(g.size(), 0.0);
    if (states_.count() == 0) {
      y0_ = y;
      g0_ = g;
    } else {
      std::size_t k = states_.count() - 1;
      const double* gp = integrands_.get(k, t);
      const double* cp = cumulative_.get(k, t);
      for (std::size_t s = 0; s < nh_; ++s) c[s] = cp[s] + 0.5 * dt_ * (gp[s] + g[s]);
    }
    states_.push(y.data());
    integrands_.push(g.data());
    cumulative_.push(c.data());
  }

  double last_time() const { return static_cast<double>(states_.count() - 1) * dt_; }

  void state_at(double t, double* out) const override {
    if (t <= 0.0) {
      std::copy(y0_.begin(), y0_.end(), out);
      return;
    }
    auto [i, theta] = locate(t);
    const double* a = states_.get(i, t);
    if (theta == 0.0) {
      std::copy(a, a + dim_, out);
      return;
    }
    const double* b = states_.get(i + 1, t);
    for (std::size_t j = 0; j < dim_; ++j) out[j] = a[j] + theta * (b[j] - a[j]);
  }

  double integral(std::size_t slot, double from, double to, double current) const override {
    double tk = last_time();
    std::size_t k = states_.count() - 1;
    double tail = (to - tk) * 0.5 * (integrands_.get(k, to)[slot] + current);
    return cumulative_at(slot, tk) - cumulative_at(slot, std::min(from, tk)) + tail;
  }

 private:
  std::pair<std::size_t, double> locate(double t) const {
    double q = t / dt_;
    double f = std::floor(q);
    double theta = q - f;
    auto i = static_cast<std::size_t>(f);
    if (theta < kGridSnap) theta = 0.0;
    if (theta > 1.0 - kGridSnap) {
      ++i;
      theta = 0.0;
    }
    return {i, theta};
  }

  // Integral of the piecewise-linear integrand from 0 to t.
  double cumulative_at(std::size_t slot, double t) const {
    if (t <= 0.0) return t * g0_[slot];
    auto [i, theta] = locate(t);
    double c = cumulative_.get(i, t)[slot];
    if (theta == 0.0) return c;
    double ga = integrands_.get(i, t)[slot];
    double gb = integrands_.get(i + 1, t)[slot];
    double gm = ga + theta * (gb - ga);
    return c + theta * dt_ * 0.5 * (ga + gm);
  }

  const RateSystem& sys_;
  double dt_;
  std::size_t dim_;
  std::size_t nh_;
  std::vector<double> y0_;
  std::vector<double> g0_;
  Ring states_;
  Ring integrands_;
  Ring cumulative_;
};

// Exact grid reads for the difference flavor.
class StepHistory : public HistoryAccessor {
 public:
  StepHistory(const RateSystem& sys, double step, std::size_t window_steps)
      : sys_(sys), step_(step), nh_(sys.histint_count()), states_(window_steps + 2, sys.dimension()),
        integrands_(window_steps + 2, std::max<std::size_t>(1, nh_)) {}

  void accept(double t, const std::vector<double>& y) {
    std::vector<double> g(std::max<std::size_t>(1, nh_), 0.0);
    if (nh_ > 0) sys_.histint_integrands(t, y.data(), g.data());
    if (states_.count() == 0) {
      y0_ = y;
      g0_ = g;
    }
    states_.push(y.data());
    integrands_.push(g.data());
  }

  void state_at(double t, double* out) const override {
    long k = std::lround(t / step_);
    if (k <= 0) {
      std::copy(y0_.begin(), y0_.end(), out);
      return;
    }
    const double* v = states_.get(static_cast<std::size_t>(k), t);
    std::copy(v, v + y0_.size(), out);
  }

  double integral(std::size_t slot, double from, double to, double current) const override {
    long k = std::lround(to / step_);
    long T = std::lround((to - from) / step_);
    double sum = current;
    for (long i = k - T + 1; i < k; ++i) {
      sum += i <= 0 ? g0_[slot] : integrands_.get(static_cast<std::size_t>(i), to)[slot];
    }
    return step_ * sum;
  }

 private:
  const RateSystem& sys_;
  double step_;
  std::size_t nh_;
  std::vector<double> y0_;
  std::vector<double> g0_;
  Ring states_;
  Ring integrands_;
};

template <class History>
Trajectory rk4_run(const RateSystem& sys, const std::vector<double>& init, double t_end, double dt, std::size_t stride, History* hist) {
  if (stride == 0) throw ModelError("stride must be at least 1");
  std::size_t n = step_count(t_end, dt);
  Trajectory tr = start(sys, init, dt);
  Monitor mon(sys);
  std::size_t d = sys.dimension();
  std::vector<double> y = init, k1(d), k2(d), k3(d), k4(d), tmp(d);
  mon.check(0.0, y);
  if (hist) hist->accept(0.0, y);
  tr.times.push_back(0.0);
  tr.values.push_back(mon.report(y));
  for (std::size_t k = 0; k < n; ++k) {
    double t = static_cast<double>(k) * dt;
    sys.derivative(t, y.data(), hist, k1.data());
    check_derivative(t, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    sys.derivative(t + 0.5 * dt, tmp.data(), hist, k2.data());
    check_derivative(t, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    sys.derivative(t + 0.5 * dt, tmp.data(), hist, k3.data());
    check_derivative(t, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + dt * k3[i];
    sys.derivative(t + dt, tmp.data(), hist, k4.data());
    check_derivative(t, k4);
    for (std::size_t i = 0; i < d; ++i) y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    double t1 = static_cast<double>(k + 1) * dt;
    mon.check(t1, y);
    if (hist) hist->accept(t1, y);
    if ((k + 1) % stride == 0 || k + 1 == n) {
      tr.times.push_back(t1);
      tr.values.push_back(mon.report(y));
    }
  }
  return tr;
}

}  // namespace

Trajectory integrate(const RateSystem& sys, const std::vector<double>& init, double t_end, double dt, std::size_t stride) {
  if (sys.has_history()) throw ModelError("model reads history; use integrate_delayed");
  return rk4_run<GridHistory>(sys, init, t_end, dt, stride, nullptr);
}

Trajectory integrate_delayed(const RateSystem& sys, const std::vector<double>& init, double t_end, double dt, std::size_t stride) {
  step_count(t_end, dt);
  std::size_t window = 0;
  for (double w : sys.delays()) window = std::max(window, aligned_steps(w, dt));
  GridHistory hist(sys, dt, window);
  return rk4_run(sys, init, t_end, dt, stride, &hist);
}

Trajectory iterate_difference(const RateSystem& sys, const std::vector<double>& init, std::size_t k_steps, std::size_t stride) {
  if (stride == 0) throw ModelError("stride must be at least 1");
  double h = sys.flavor() == Flavor::difference ? sys.step() : 1.0;
  std::size_t window = 0;
  for (double w : sys.delays()) window = std::max(window, aligned_steps(w, h));
  StepHistory hist(sys, h, window);
  Trajectory tr = start(sys, init, h);
  tr.flavor = Flavor::difference;
  Monitor mon(sys);
  std::size_t d = sys.dimension();
  std::vector<double> y = init, f(d);
  mon.check(0.0, y);
  hist.accept(0.0, y);
  tr.times.push_back(0.0);
  tr.values.push_back(mon.report(y));
  for (std::size_t k = 0; k < k_steps; ++k) {
    double t = static_cast<double>(k) * h;
    sys.derivative(t, y.data(), &hist, f.data());
    check_derivative(t, f);
    for (std::size_t i = 0; i < d; ++i) y[i] += h * f[i];
    double t1 = static_cast<double>(k + 1) * h;
    mon.check(t1, y);
    hist.accept(t1, y);
    if ((k + 1) % stride == 0 || k + 1 == k_steps) {
      tr.times.push_back(t1);
      tr.values.push_back(mon.report(y));
    }
  }
  return tr;
}

Trajectory simulate(const RateSystem& sys, double t_end, double dt, std::size_t stride) {
  switch (sys.flavor()) {
    case Flavor::ode: return integrate(sys, sys.initial(), t_end, dt, stride);
    case Flavor::dde: return integrate_delayed(sys, sys.initial(), t_end, dt, stride);
    case Flavor::difference: return iterate_difference(sys, sys.initial(), step_count(t_end, sys.step()), stride);
  }
  throw ModelError("unknown flavor");
}

SteadyValue steady_value(const Trajectory& traj, const std::string& name) {
  auto v = traj.column(name);
  SteadyValue out;
  if (v.empty()) return out;
  std::size_t w = std::max<std::size_t>(1, v.size() / 10);
  auto mean = [&](std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += v[i];
    return s / static_cast<double>(to - from);
  };
  out.value = mean(v.size() - w, v.size());
  if (v.size() >= 2 * w) {
    out.change = std::fabs(out.value - mean(v.size() - 2 * w, v.size() - w));
    out.settled = out.change < 1e-5;
  }
  return out;
}

double max_conservation_drift(const Trajectory& traj, std::size_t n_states, double total) {
  double worst = 0.0;
  for (const auto& v : traj.values) {
    double s = 0.0;
    for (std::size_t i = 0; i < n_states; ++i) s += v[i];
    worst = std::max(worst, std::fabs(s - total));
  }
  return worst;
}

}  // namespace swarmk
