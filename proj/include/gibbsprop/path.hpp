#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/potential.hpp"

namespace gibbsprop {

// Values of the sites of a volume on the time grid s_k = (start_step + k) dt,
// k = 0..K, stored site-major. Circle paths are kept as a continuous lift.
// increments(s, k) = X(s_{k+1}) - X(s_k) + U'(X(s_k)) dt / 2 is the
// compensated Brownian increment dB-bar.
class PathBundle {
 public:
  PathBundle() = default;
  PathBundle(Volume sites, double dt, std::size_t steps, long start_step = 0, StateSpace space = StateSpace::line)
      : sites_(std::move(sites)), dt_(dt), K_(steps), start_(start_step), space_(space),
        values_(sites_.size() * (steps + 1), 0.0) {
    require(dt > 0 && std::isfinite(dt), "PathBundle: dt must be positive");
  }

  const Volume& sites() const { return sites_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return K_; }
  long start_step() const { return start_; }
  long end_step() const { return start_ + static_cast<long>(K_); }
  double start_time() const { return static_cast<double>(start_) * dt_; }
  double end_time() const { return static_cast<double>(end_step()) * dt_; }
  StateSpace space() const { return space_; }
  bool finalized() const { return !incr_.empty() || K_ == 0; }

  double* row(std::size_t site_index) { return &values_[site_index * (K_ + 1)]; }
  const double* row(std::size_t site_index) const { return &values_[site_index * (K_ + 1)]; }
  double value(std::size_t site_index, std::size_t k) const { return values_[site_index * (K_ + 1) + k]; }
  double& value(std::size_t site_index, std::size_t k) { return values_[site_index * (K_ + 1) + k]; }

  std::size_t index_of(const Site& s) const {
    auto k = sites_.index_of(s);
    if (!k) throw CoverageError("PathBundle: site " + s.str() + " not on the path");
    return *k;
  }

  // Value at a global step index.
  double at_step(std::size_t site_index, long global_step) const {
    if (global_step < start_ || global_step > end_step())
      throw CoverageError("PathBundle: step " + std::to_string(global_step) + " outside [" +
                          std::to_string(start_) + "," + std::to_string(end_step()) + "]");
    return value(site_index, static_cast<std::size_t>(global_step - start_));
  }
  double increment_at_step(std::size_t site_index, long global_step) const {
    if (!finalized()) throw ValidationError("PathBundle: increments not computed");
    if (global_step < start_ || global_step >= end_step())
      throw CoverageError("PathBundle: increment step " + std::to_string(global_step) + " outside path");
    return incr_[site_index * K_ + static_cast<std::size_t>(global_step - start_)];
  }
  double increment(std::size_t site_index, std::size_t k) const { return incr_[site_index * K_ + k]; }

  // Value at the end time, wrapped to [0, 2pi) on the circle.
  double terminal(std::size_t site_index) const {
    const double v = value(site_index, K_);
    return space_ == StateSpace::circle ? wrap_circle(v) : v;
  }

  void compute_increments(const PotentialSpec& pot) {
    incr_.assign(sites_.size() * K_, 0.0);
    for (std::size_t s = 0; s < sites_.size(); ++s) {
      const double* x = row(s);
      for (std::size_t k = 0; k < K_; ++k) incr_[s * K_ + k] = x[k + 1] - x[k] + 0.5 * pot.dU(x[k]) * dt_;
    }
  }

  const std::vector<double>& raw_values() const { return values_; }
  const std::vector<double>& raw_increments() const { return incr_; }

  bool operator==(const PathBundle&) const = default;

 private:
  Volume sites_;
  double dt_ = 1.0;
  std::size_t K_ = 0;
  long start_ = 0;
  StateSpace space_ = StateSpace::line;
  std::vector<double> values_;
  std::vector<double> incr_;
};

// How delayed evaluators see times before 0.
enum class HistoryPolicy {
  frozen,     // the path is constant, equal to its time-0 value, for s < 0
  truncated,  // windows are cut at 0; lags reaching before 0 are unavailable
};

inline std::string to_string(HistoryPolicy p) { return p == HistoryPolicy::frozen ? "frozen" : "truncated"; }

inline long steps_for(double duration, double dt, const char* what) {
  const double r = duration / dt;
  const long n = std::lround(r);
  if (std::abs(r - static_cast<double>(n)) > 1e-7 * std::max(1.0, r))
    throw ValidationError(std::string(what) + ": " + std::to_string(duration) + " is not a multiple of dt = " +
                          std::to_string(dt));
  return n;
}

}  // namespace gibbsprop
