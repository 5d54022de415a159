#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/path.hpp"

namespace gibbsprop {

// Read access for a drift evaluator at site i and grid step l: values of
// omega_{i+N} at steps l - lag, 0 <= lag <= memory steps.
class PathView {
 public:
  PathView(const PathBundle& path, const Neighborhood& nbhd, const std::size_t* site_rows, const Site& center,
           long step, long max_lag, HistoryPolicy policy)
      : path_(&path), nbhd_(&nbhd), rows_(site_rows), center_(center), step_(step), max_lag_(max_lag),
        policy_(policy) {}

  const Site& site() const { return center_; }
  long step() const { return step_; }
  double dt() const { return path_->dt(); }
  double time() const { return static_cast<double>(step_) * path_->dt(); }
  long max_lag() const { return max_lag_; }
  const Neighborhood& neighborhood() const { return *nbhd_; }
  std::size_t size() const { return nbhd_->size(); }

  bool available(long lag) const {
    return lag >= 0 && lag <= max_lag_ && (policy_ == HistoryPolicy::frozen || step_ - lag >= 0);
  }

  // Value of the k-th offset (in the neighborhood's sorted order).
  double at_index(std::size_t k, long lag = 0) const {
    if (lag < 0 || lag > max_lag_)
      throw CoverageError("drift evaluator read lag " + std::to_string(lag) + " beyond its declared memory");
    long g = step_ - lag;
    if (g < 0) {
      if (policy_ == HistoryPolicy::truncated)
        throw CoverageError("drift evaluator read before time 0 under the truncated-window policy");
      g = 0;
    }
    return path_->at_step(rows_[k], g);
  }

  double at(const Site& offset, long lag = 0) const {
    auto k = nbhd_->offsets().index_of(offset);
    if (!k) throw CoverageError("drift evaluator read offset " + offset.str() + " outside its neighborhood");
    return at_index(*k, lag);
  }

  double self(long lag = 0) const { return at(Site::zero(center_.dim), lag); }

 private:
  const PathBundle* path_;
  const Neighborhood* nbhd_;
  const std::size_t* rows_;
  Site center_;
  long step_;
  long max_lag_;
  HistoryPolicy policy_;
};

using ParamMap = std::map<std::string, double>;
using DriftEvaluator = std::function<double(const PathView&)>;

// Bounded space-time-local drift b_i(t, omega) with intensity beta.
struct DriftSpec {
  std::string name;
  ParamMap params;
  double beta = 0.0;
  Neighborhood nbhd;
  double memory = 0.0;  // t0
  double bound = 0.0;   // b-bar
  HistoryPolicy history = HistoryPolicy::frozen;
  DriftEvaluator eval;

  long memory_steps(double dt) const { return memory > 0 ? std::lround(std::ceil(memory / dt - 1e-9)) : 0; }

  double evaluate(const PathView& v) const {
    const double b = eval(v);
    if (!std::isfinite(b)) throw NumericalError("drift '" + name + "' returned a non-finite value");
    if (std::abs(b) > bound * (1.0 + 1e-12) + 1e-300)
      throw BoundViolationError("drift '" + name + "' returned " + std::to_string(b) + " above its bound " +
                                std::to_string(bound) + " at site " + v.site().str() + ", t = " +
                                std::to_string(v.time()));
    return b;
  }

  DriftSpec with_beta(double b) const {
    DriftSpec d = *this;
    d.beta = b;
    return d;
  }
};

namespace detail {

inline double param(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline double param_required(const ParamMap& p, const std::string& key, const std::string& drift) {
  auto it = p.find(key);
  if (it == p.end()) throw ValidationError("drift '" + drift + "' needs parameter '" + key + "'");
  return it->second;
}

inline void finite_params(const ParamMap& p, const std::string& drift) {
  for (const auto& [k, v] : p)
    if (!std::isfinite(v)) throw ValidationError("drift '" + drift + "': parameter '" + k + "' is not finite");
}

}  // namespace detail

// b = c.
inline DriftSpec constant_drift(double c, double beta = 1.0, int dim = 1) {
  DriftSpec d;
  d.name = "constant";
  d.params = {{"c", c}};
  d.beta = beta;
  d.nbhd = Neighborhood::single(dim);
  d.bound = std::abs(c);
  d.eval = [c](const PathView&) { return c; };
  return d;
}

// Markov finite-range drift: A tanh(self x_i + coupling sum_{j in i+N, j != i} x_j + bias).
inline DriftSpec markov_tanh_drift(const ParamMap& p, double beta, int dim = 1) {
  detail::finite_params(p, "markov_tanh");
  const double A = detail::param(p, "A", 1.0), self = detail::param(p, "self", 0.0),
               coupling = detail::param(p, "coupling", 1.0), bias = detail::param(p, "bias", 0.0);
  const int range = static_cast<int>(detail::param(p, "range", 1.0));
  require(range >= 0, "markov_tanh: range must be >= 0");
  DriftSpec d;
  d.name = "markov_tanh";
  d.params = p;
  d.beta = beta;
  d.nbhd = Neighborhood::cube(range, dim);
  d.bound = std::abs(A);
  d.eval = [A, self, coupling, bias](const PathView& v) {
    double s = bias;
    const auto& offs = v.neighborhood().offsets();
    for (std::size_t k = 0; k < offs.size(); ++k) s += (offs[k].is_zero() ? self : coupling) * v.at_index(k);
    return A * std::tanh(s);
  };
  return d;
}

// Rotor alignment on the circle: A times the mean of sin(x_j - x_i) over the neighbours.
inline DriftSpec markov_sine_drift(const ParamMap& p, double beta, int dim = 1) {
  detail::finite_params(p, "markov_sine");
  const double A = detail::param(p, "A", 1.0);
  const int range = static_cast<int>(detail::param(p, "range", 1.0));
  require(range >= 1, "markov_sine: range must be >= 1");
  DriftSpec d;
  d.name = "markov_sine";
  d.params = p;
  d.beta = beta;
  d.nbhd = Neighborhood::cube(range, dim);
  d.bound = std::abs(A);
  d.eval = [A](const PathView& v) {
    const double xi = v.self();
    double s = 0;
    const auto& offs = v.neighborhood().offsets();
    for (std::size_t k = 0; k < offs.size(); ++k)
      if (!offs[k].is_zero()) s += std::sin(v.at_index(k) - xi);
    return A * s / static_cast<double>(offs.size() - 1);
  };
  return d;
}

// Periodic forcing A sin(omega t + phase); bound A.
inline DriftSpec resonance_drift(const ParamMap& p, double beta, int dim = 1) {
  detail::finite_params(p, "resonance");
  const double A = detail::param_required(p, "A", "resonance");
  const double omega = detail::param(p, "omega", 1.0), phase = detail::param(p, "phase", 0.0);
  DriftSpec d;
  d.name = "resonance";
  d.params = p;
  d.beta = beta;
  d.nbhd = Neighborhood::single(dim);
  d.bound = std::abs(A);
  d.eval = [A, omega, phase](const PathView& v) { return A * std::sin(omega * v.time() + phase); };
  return d;
}

// Delayed feedback alpha * clip(x_i(t - t0), -R, R). The clip keeps the drift
// bounded by |alpha| R. Under the truncated policy the feedback is off for t < t0.
inline DriftSpec delayed_feedback_drift(const ParamMap& p, double beta, int dim = 1) {
  detail::finite_params(p, "delayed_feedback");
  const double alpha = detail::param_required(p, "alpha", "delayed_feedback");
  const double t0 = detail::param_required(p, "t0", "delayed_feedback");
  const double R = detail::param(p, "clip", 3.0);
  require(t0 > 0, "delayed_feedback: t0 must be positive");
  require(R > 0, "delayed_feedback: clip must be positive");
  DriftSpec d;
  d.name = "delayed_feedback";
  d.params = p;
  d.beta = beta;
  d.nbhd = Neighborhood::single(dim);
  d.memory = t0;
  d.bound = std::abs(alpha) * R;
  d.eval = [alpha, R](const PathView& v) {
    const long lag = v.max_lag();
    if (!v.available(lag)) return 0.0;
    return alpha * std::clamp(v.self(lag), -R, R);
  };
  return d;
}

// Time memory: sum over grid cells [s_l, s_{l+1}) of the window [max(0, t - t0), t)
// of (integral of eps over the cell) * f(x_i(s_l)), with eps(s) = a exp(-kappa s)
// and f = F tanh. Bound F * E with E the largest window mass of |eps|.
inline DriftSpec time_memory_drift(const ParamMap& p, double beta, int dim = 1) {
  detail::finite_params(p, "time_memory");
  const double a = detail::param(p, "a", 1.0), kappa = detail::param(p, "kappa", 0.0);
  const double F = detail::param(p, "F", 1.0);
  const double t0 = detail::param_required(p, "t0", "time_memory");
  require(t0 > 0, "time_memory: t0 must be positive");
  require(kappa >= 0, "time_memory: kappa must be >= 0");
  auto eps_mass = [a, kappa](double s0, double s1) {
    if (kappa == 0.0) return a * (s1 - s0);
    return a * (std::exp(-kappa * s0) - std::exp(-kappa * s1)) / kappa;
  };
  DriftSpec d;
  d.name = "time_memory";
  d.params = p;
  d.beta = beta;
  d.nbhd = Neighborhood::single(dim);
  d.memory = t0;
  // |eps| is non-increasing, so the heaviest window is [0, t0].
  d.bound = std::abs(F) * std::abs(eps_mass(0.0, t0));
  d.eval = [F, eps_mass](const PathView& v) {
    const double dt = v.dt();
    double s = 0;
    for (long lag = 1; lag <= v.max_lag() && v.step() - lag >= 0; ++lag) {
      const double s0 = static_cast<double>(v.step() - lag) * dt;
      s += eps_mass(s0, s0 + dt) * F * std::tanh(v.self(lag));
    }
    return s;
  };
  return d;
}

// Space-time integral: sum over cells of the window of
// A tanh(mean of x_{i+N}(s_l)) exp(-(t - s_l)) (V(s_{l+1}) - V(s_l)), V(s) = sin(nu s).
// Total variation of V over a window is at most nu t0, so the bound is |A| nu t0.
inline DriftSpec space_time_drift(const ParamMap& p, double beta, int dim = 1) {
  detail::finite_params(p, "space_time");
  const double A = detail::param(p, "A", 1.0), nu = detail::param(p, "nu", 1.0);
  const double t0 = detail::param_required(p, "t0", "space_time");
  const int range = static_cast<int>(detail::param(p, "range", 1.0));
  require(t0 > 0, "space_time: t0 must be positive");
  require(range >= 0, "space_time: range must be >= 0");
  DriftSpec d;
  d.name = "space_time";
  d.params = p;
  d.beta = beta;
  d.nbhd = Neighborhood::cube(range, dim);
  d.memory = t0;
  d.bound = std::abs(A) * std::abs(nu) * t0;
  d.eval = [A, nu](const PathView& v) {
    const double dt = v.dt();
    const double t = v.time();
    const std::size_t n = v.size();
    double s = 0;
    for (long lag = 1; lag <= v.max_lag() && v.step() - lag >= 0; ++lag) {
      const double s0 = static_cast<double>(v.step() - lag) * dt;
      double mean = 0;
      for (std::size_t k = 0; k < n; ++k) mean += v.at_index(k, lag);
      mean /= static_cast<double>(n);
      s += A * std::tanh(mean) * std::exp(-(t - s0)) * (std::sin(nu * (s0 + dt)) - std::sin(nu * s0));
    }
    return s;
  };
  return d;
}

using DriftFactory = std::function<DriftSpec(const ParamMap&, double beta, int dim)>;

// Named constructors for the built-in drifts.
inline const std::map<std::string, DriftFactory>& builtin_drifts() {
  static const std::map<std::string, DriftFactory> catalog = {
      {"constant",
       [](const ParamMap& p, double beta, int dim) {
         detail::finite_params(p, "constant");
         return constant_drift(detail::param_required(p, "c", "constant"), beta, dim);
       }},
      {"markov_tanh", markov_tanh_drift},
      {"markov_sine", markov_sine_drift},
      {"resonance", resonance_drift},
      {"delayed_feedback", delayed_feedback_drift},
      {"time_memory", time_memory_drift},
      {"space_time", space_time_drift},
  };
  return catalog;
}

inline DriftSpec make_drift(const std::string& name, const ParamMap& params, double beta, int dim = 1) {
  const auto& cat = builtin_drifts();
  auto it = cat.find(name);
  if (it == cat.end()) throw ValidationError("unknown drift '" + name + "'");
  DriftSpec d = it->second(params, beta, dim);
  require(std::isfinite(beta) && beta >= 0, "drift intensity beta must be finite and >= 0");
  return d;
}

// Row indices of c + N inside a path, for each drift center c.
struct DriftLayout {
  std::vector<Site> centers;
  std::vector<std::size_t> center_rows;
  std::vector<std::size_t> rows;  // centers.size() x |N|
  std::size_t width = 0;

  DriftLayout() = default;
  DriftLayout(const Volume& path_sites, const Volume& centers_vol, const Neighborhood& nbhd) {
    width = nbhd.size();
    for (const auto& c : centers_vol) {
      centers.push_back(c);
      auto r = path_sites.index_of(c);
      if (!r) throw CoverageError("drift center " + c.str() + " not on the path");
      center_rows.push_back(*r);
      for (const auto& o : nbhd.offsets()) {
        auto q = path_sites.index_of(c + o);
        if (!q) throw CoverageError("path does not cover " + (c + o).str() + " needed by site " + c.str());
        rows.push_back(*q);
      }
    }
  }
  const std::size_t* rows_of(std::size_t k) const { return rows.data() + k * width; }
};

}  // namespace gibbsprop
