#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gibbsprop/bridge.hpp"
#include "gibbsprop/drift.hpp"
#include "gibbsprop/error.hpp"
#include "gibbsprop/kernel.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/parallel.hpp"
#include "gibbsprop/path.hpp"
#include "gibbsprop/simulate.hpp"
#include "gibbsprop/stats.hpp"

namespace gibbsprop {

struct MCParams {
  std::size_t samples = 2000;
  double dt = 0.01;
  double bandwidth_scale = 1.0;
  double ess_fraction = 0.01;  // minimum effective sample size, as a fraction of samples
  unsigned threads = 1;
};

struct DensityEstimate {
  double value = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
  std::string method;
  double log_value = 0.0;
  double ess = 0.0;

  Estimate estimate() const { return {value, std_err, n, false}; }
};

namespace detail {

// Itô left-point sum of -beta b dB-bar + beta^2 b^2 dt / 2 for one center.
inline double psi_rows(const DriftSpec& drift, const PathBundle& path, const DriftLayout& layout, std::size_t c,
                       long la, long lb) {
  const double beta = drift.beta;
  const double dt = path.dt();
  const long lag = drift.memory_steps(dt);
  const std::size_t row = layout.center_rows[c];
  double s = 0.0;
  for (long l = la; l < lb; ++l) {
    PathView v(path, drift.nbhd, layout.rows_of(c), layout.centers[c], l, lag, drift.history);
    const double b = drift.evaluate(v);
    s += -beta * b * path.increment_at_step(row, l) + 0.5 * beta * beta * b * b * dt;
  }
  return s;
}

inline void window_steps(double a, double b, double dt, long& la, long& lb) {
  require(b >= a, "window end before start");
  la = steps_for(a, dt, "window start");
  lb = steps_for(b, dt, "window end");
}

}  // namespace detail

// Psi of the window set k + N over [a, b].
inline double psi(const DriftSpec& drift, const Site& k, double a, double b, const PathBundle& path) {
  if (drift.beta == 0.0) return 0.0;
  long la, lb;
  detail::window_steps(a, b, path.dt(), la, lb);
  DriftLayout layout(path.sites(), Volume{k}, drift.nbhd);
  return detail::psi_rows(drift, path, layout, 0, la, lb);
}

// Psi_A: nonzero only for window sets of the form A = k + N.
inline double psi_set(const DriftSpec& drift, const Volume& A, double a, double b, const PathBundle& path) {
  if (A.empty() || A.size() != drift.nbhd.size()) return 0.0;
  const Site k = A[0] - drift.nbhd.offsets()[0];
  if (!(drift.nbhd.around(k) == A)) return 0.0;
  return psi(drift, k, a, b, path);
}

// Sum of Psi_A over all A contained in vol, i.e. over centers in the interior.
inline double total_psi(const DriftSpec& drift, const Volume& vol, double a, double b, const PathBundle& path) {
  if (drift.beta == 0.0) return 0.0;
  long la, lb;
  detail::window_steps(a, b, path.dt(), la, lb);
  DriftLayout layout(path.sites(), interior(vol, drift.nbhd), drift.nbhd);
  double s = 0.0;
  for (std::size_t c = 0; c < layout.centers.size(); ++c) s += detail::psi_rows(drift, path, layout, c, la, lb);
  return s;
}

// log M over [a, b], assembled directly from the path values: the increments
// of B-bar are rebuilt from X and U' rather than read from the bundle.
inline double log_girsanov_weight(const DriftSpec& drift, const PotentialSpec& pot, const Volume& vol, double a,
                                  double b, const PathBundle& path) {
  if (drift.beta == 0.0) return 0.0;
  long la, lb;
  detail::window_steps(a, b, path.dt(), la, lb);
  const Volume inner = interior(vol, drift.nbhd);
  DriftLayout layout(path.sites(), inner, drift.nbhd);
  const long lag = drift.memory_steps(path.dt());
  const double dt = path.dt(), beta = drift.beta;
  double stoch = 0.0, quad = 0.0;
  for (std::size_t c = 0; c < layout.centers.size(); ++c) {
    const std::size_t row = layout.center_rows[c];
    for (long l = la; l < lb; ++l) {
      PathView v(path, drift.nbhd, layout.rows_of(c), layout.centers[c], l, lag, drift.history);
      const double bv = drift.evaluate(v);
      const double x0 = path.at_step(row, l), x1 = path.at_step(row, l + 1);
      stoch += bv * (x1 - x0 + 0.5 * pot.dU(x0) * dt);
      quad += bv * bv * dt;
    }
  }
  return beta * stoch - 0.5 * beta * beta * quad;
}

// Shared state for bridge Monte Carlo on one potential: the free kernel and a
// bridge sampler, built once and reused across probes.
class BridgeEngine {
 public:
  BridgeEngine(const PotentialSpec& pot, const MCParams& mc, SpectralOptions so = {})
      : pot_(pot), mc_(mc), kernel_(std::make_shared<FreeKernel>(pot, so)),
        sampler_(make_bridge_sampler(kernel_, mc.bandwidth_scale, mc.samples)) {}
  BridgeEngine(std::shared_ptr<const FreeKernel> kernel, const MCParams& mc)
      : pot_(kernel->potential()), mc_(mc), kernel_(std::move(kernel)),
        sampler_(make_bridge_sampler(kernel_, mc.bandwidth_scale, mc.samples)) {}

  const PotentialSpec& potential() const { return pot_; }
  const MCParams& mc() const { return mc_; }
  const FreeKernel& kernel() const { return *kernel_; }
  std::shared_ptr<const FreeKernel> kernel_ptr() const { return kernel_; }
  const BridgeSampler& sampler() const { return *sampler_; }
  bool exact() const { return sampler_->exact(); }

  // Product of independent single-site bridges from x to y on [0, t]; returns the log-weight.
  double sample_bridges(const Volume& vol, const Configuration& x, const Configuration& y, double t, Rng& rng,
                        PathBundle& out) const {
    const long K = steps_for(t, mc_.dt, "bridge horizon");
    out = PathBundle(vol, mc_.dt, static_cast<std::size_t>(K), 0, pot_.space);
    double lw = 0.0;
    for (std::size_t s = 0; s < vol.size(); ++s)
      lw += sampler_->sample(x.at(vol[s]), y.at(vol[s]), static_cast<std::size_t>(K), mc_.dt, rng, out.row(s));
    out.compute_increments(pot_);
    return lw;
  }

  // E over the bridge law P^{xy} of F(path).
  Estimate bridge_expectation(const std::function<double(const PathBundle&)>& F, const Volume& vol,
                              const Configuration& x, const Configuration& y, double t, std::uint64_t seed) const {
    require(t > 0, "bridge_expectation: t must be positive");
    const std::size_t n = mc_.samples;
    std::vector<double> lw(n), g(n);
    parallel_for(n, mc_.threads, [&](std::size_t r) {
      Rng rng(seed, "bridge", r);
      PathBundle p;
      lw[r] = sample_bridges(vol, x, y, t, rng, p);
      g[r] = F(p);
    });
    if (exact()) {
      MeanAccumulator acc;
      for (double v : g) acc.add(v);
      return acc.estimate();
    }
    const auto wm = self_normalized_mean(lw, g);
    check_ess(wm.ess, "bridge_expectation");
    return {wm.value, wm.std_err, n, false};
  }

  // f^t_vol(x, y) = E_{P^{xy}}[exp(-sum_A Psi_A)].
  DensityEstimate density(const DriftSpec& drift, const Volume& vol, const Configuration& x, const Configuration& y,
                          double t, std::uint64_t seed) const {
    require(t > 0, "density: t must be positive");
    const std::size_t n = mc_.samples;
    std::vector<double> lw(n), lg(n);
    parallel_for(n, mc_.threads, [&](std::size_t r) {
      Rng rng(seed, "density", r);
      PathBundle p;
      lw[r] = sample_bridges(vol, x, y, t, rng, p);
      lg[r] = -total_psi(drift, vol, 0.0, t, p);
    });
    DensityEstimate d;
    d.n = n;
    d.method = "bridge-MC";
    if (exact()) {
      const auto lm = log_mean_exp(lg);
      d.value = lm.value;
      d.std_err = lm.std_err;
      d.log_value = lm.log_value;
      d.ess = static_cast<double>(n);
      return d;
    }
    std::vector<double> g(n);
    for (std::size_t r = 0; r < n; ++r) g[r] = std::exp(lg[r]);
    const auto wm = self_normalized_mean(lw, g);
    check_ess(wm.ess, "density");
    d.value = wm.value;
    d.std_err = wm.std_err;
    d.log_value = std::log(wm.value);
    d.ess = wm.ess;
    return d;
  }

  // Independent estimate: Gaussian kernel density of interacting endpoints over
  // that of free endpoints, driven by common noise.
  DensityEstimate density_endpoint_ratio(const DriftSpec& drift, const Volume& vol, const Configuration& x,
                                         const Configuration& y, double t, std::uint64_t seed) const {
    require(t > 0, "density: t must be positive");
    const std::size_t n = mc_.samples;
    const DriftSpec free = drift.with_beta(0.0);
    const double s2 = std::min(t, kernel_->measure().variance());
    const double h = mc_.bandwidth_scale * std::sqrt(s2) * std::pow(static_cast<double>(n), -0.2);
    std::vector<double> q(n), p(n);
    auto kde = [&](const PathBundle& path) {
      double l = 0.0;
      for (std::size_t s = 0; s < vol.size(); ++s) {
        const double yv = y.at(vol[s]);
        const double d = pot_.space == StateSpace::circle ? circle_diff(yv, path.terminal(s)) : path.terminal(s) - yv;
        l += -0.5 * d * d / (h * h);
      }
      return std::exp(l);
    };
    parallel_for(n, mc_.threads, [&](std::size_t r) {
      Rng rq(seed, "endpoint", r), rp(seed, "endpoint", r);
      q[r] = kde(simulate_with(drift, pot_, vol, x, t, mc_.dt, rq));
      p[r] = kde(simulate_with(free, pot_, vol, x, t, mc_.dt, rp));
    });
    MeanAccumulator aq, ap;
    for (std::size_t r = 0; r < n; ++r) {
      aq.add(q[r]);
      ap.add(p[r]);
    }
    if (!(ap.mean() > 0)) throw PrecisionError("density: no free endpoints near y; increase samples or bandwidth");
    const double ratio = aq.mean() / ap.mean();
    MeanAccumulator lin;
    for (std::size_t r = 0; r < n; ++r) lin.add(q[r] - ratio * p[r]);
    DensityEstimate d;
    d.n = n;
    d.method = "endpoint-ratio";
    d.value = ratio;
    d.std_err = lin.std_err() / ap.mean();
    d.log_value = std::log(ratio);
    d.ess = static_cast<double>(n);
    return d;
  }

 private:
  void check_ess(double ess, const char* what) const {
    if (ess < mc_.ess_fraction * static_cast<double>(mc_.samples))
      throw PrecisionError(std::string(what) + ": effective sample size " + std::to_string(ess) + " of " +
                           std::to_string(mc_.samples) + " is below the threshold");
  }

  PotentialSpec pot_;
  MCParams mc_;
  std::shared_ptr<const FreeKernel> kernel_;
  std::unique_ptr<BridgeSampler> sampler_;
};

inline Estimate bridge_expectation(const std::function<double(const PathBundle&)>& F, const PotentialSpec& pot,
                                   const Volume& vol, const Configuration& x, const Configuration& y, double t,
                                   const MCParams& mc, std::uint64_t seed) {
  return BridgeEngine(pot, mc).bridge_expectation(F, vol, x, y, t, seed);
}

inline DensityEstimate density(const DriftSpec& drift, const PotentialSpec& pot, const Volume& vol,
                               const Configuration& x, const Configuration& y, double t, const MCParams& mc,
                               std::uint64_t seed) {
  return BridgeEngine(pot, mc).density(drift, vol, x, y, t, seed);
}

}  // namespace gibbsprop
