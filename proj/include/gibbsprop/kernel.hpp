#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"
#include "gibbsprop/potential.hpp"
#include "gibbsprop/stats.hpp"

namespace gibbsprop {

struct SpectralOptions {
  std::size_t grid_points = 801;
};

// Transition density p_t(x, y) of the free dynamics relative to m.
// Closed forms for the Ornstein-Uhlenbeck and free circle cases; otherwise a
// reversible birth-death discretization of the generator on the truncation
// interval of m (reflecting ends, periodic on the circle), diagonalized once.
class FreeKernel {
 public:
  explicit FreeKernel(const PotentialSpec& pot, SpectralOptions opt = {})
      : pot_(pot), measure_(std::make_shared<ReferenceMeasure>(pot)) {
    if (!pot.has_exact_bridge()) build_spectral(opt);
  }

  const PotentialSpec& potential() const { return pot_; }
  const ReferenceMeasure& measure() const { return *measure_; }
  std::shared_ptr<const ReferenceMeasure> measure_ptr() const { return measure_; }
  bool closed_form() const { return pot_.has_exact_bridge(); }

  double gap() const {
    if (pot_.is_quadratic()) return pot_.quadratic_rate();
    if (pot_.is_free_circle()) return 0.5;
    return lambda_.size() > 1 ? lambda_[1] : 0.0;
  }

  double density(double t, double x, double y) const {
    if (!(t > 0)) throw ValidationError("free_kernel: time must be positive");
    if (pot_.is_quadratic()) return ou(t, x, y);
    if (pot_.is_free_circle()) return circle(t, x, y);
    return spectral(t, x, y);
  }
  double operator()(double t, double x, double y) const { return density(t, x, y); }

  // Eigenvalues of -L (spectral backend only; ascending, first ~ 0).
  const std::vector<double>& eigenvalues() const { return lambda_; }

 private:
  double ou(double t, double x, double y) const {
    const double a = pot_.quadratic_rate();
    const double e = std::exp(-a * t);
    const double v = -std::expm1(-2.0 * a * t) / (2.0 * a);
    const double vs = 1.0 / (2.0 * a);
    const double d = y - x * e;
    // N(y; x e, v) / N(y; 0, vs)
    return std::sqrt(vs / v) * std::exp(-d * d / (2.0 * v) + y * y / (2.0 * vs));
  }

  static double circle(double t, double x, double y) {
    const double d = circle_diff(x, y);
    if (t < 1.0) {
      // Image sum of the Gaussian lift, times 2 pi because m is dx / 2 pi.
      double s = 0.0;
      for (int n = -8; n <= 8; ++n) {
        const double z = d + kTwoPi * n;
        s += std::exp(-z * z / (2.0 * t));
      }
      return kTwoPi * s / std::sqrt(kTwoPi * t);
    }
    double s = 1.0;
    for (int k = 1; k <= 64; ++k) {
      const double term = std::exp(-0.5 * k * k * t);
      if (term < 1e-18) break;
      s += 2.0 * term * std::cos(k * d);
    }
    return s;
  }

  void build_spectral(const SpectralOptions& opt) {
    const bool periodic = pot_.space == StateSpace::circle;
    const std::size_t n = std::max<std::size_t>(opt.grid_points, 16);
    lo_ = measure_->truncation_lo();
    hi_ = measure_->truncation_hi();
    periodic_ = periodic;
    h_ = periodic ? (hi_ - lo_) / static_cast<double>(n) : (hi_ - lo_) / static_cast<double>(n - 1);
    std::vector<double> u(n), pi(n);
    double umin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      u[k] = pot_.U(lo_ + static_cast<double>(k) * h_);
      umin = std::min(umin, u[k]);
    }
    double zs = 0;
    for (std::size_t k = 0; k < n; ++k) zs += pi[k] = std::exp(-(u[k] - umin));
    for (auto& p : pi) p /= zs;

    // Symmetrized generator: off-diagonal 1/(2h^2), diagonal minus the exit rates.
    const double c = 1.0 / (2.0 * h_ * h_);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    auto link = [&](std::size_t i, std::size_t j) {
      const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
      S(I, J) = -c;
      S(I, I) += c * std::exp(-(u[j] - u[i]) / 2.0);
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (i + 1 < n) link(i, i + 1);
      if (i > 0) link(i, i - 1);
    }
    if (periodic) {
      link(0, n - 1);
      link(n - 1, 0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw NumericalError("free_kernel: eigen solver did not converge");
    const auto& ev = es.eigenvalues();
    lambda_.assign(ev.data(), ev.data() + ev.size());
    if (std::abs(lambda_[0]) > 1e-8 * std::max(1.0, lambda_.back()) || lambda_.size() < 2 || !(lambda_[1] > 0))
      throw NumericalError("free_kernel: discretized generator lost its stationary mode (lambda0 = " +
                           std::to_string(lambda_[0]) + ")");
    phi_.resize(n * n);
    const auto& V = es.eigenvectors();
    for (std::size_t m = 0; m < n; ++m) {
      // Fix the sign so phi_0 is +1.
      for (std::size_t i = 0; i < n; ++i)
        phi_[m * n + i] = V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) / std::sqrt(pi[i]);
    }
    if (phi_[0] < 0)
      for (std::size_t i = 0; i < n; ++i) phi_[i] = -phi_[i];
    n_ = n;
  }

  // Linear interpolation weights of x on the spectral grid.
  void locate(double x, std::size_t& k0, std::size_t& k1, double& f) const {
    if (periodic_) {
      const double u = wrap_circle(x - lo_) / h_;
      k0 = std::min(static_cast<std::size_t>(u), n_ - 1);
      k1 = (k0 + 1) % n_;
      f = u - static_cast<double>(k0);
      return;
    }
    const double u = std::clamp((x - lo_) / h_, 0.0, static_cast<double>(n_ - 1));
    k0 = std::min(static_cast<std::size_t>(u), n_ - 2);
    k1 = k0 + 1;
    f = u - static_cast<double>(k0);
  }

  double spectral(double t, double x, double y) const {
    std::size_t a0, a1, b0, b1;
    double fa, fb;
    locate(x, a0, a1, fa);
    locate(y, b0, b1, fb);
    double s = 0.0;
    for (std::size_t m = 0; m < n_; ++m) {
      const double e = std::exp(-lambda_[m] * t);
      if (m > 0 && e < 1e-16) break;
      const double* p = &phi_[m * n_];
      s += e * ((1 - fa) * p[a0] + fa * p[a1]) * ((1 - fb) * p[b0] + fb * p[b1]);
    }
    return s;
  }

  PotentialSpec pot_;
  std::shared_ptr<const ReferenceMeasure> measure_;
  std::vector<double> lambda_;
  std::vector<double> phi_;
  std::size_t n_ = 0;
  double lo_ = 0, hi_ = 0, h_ = 1;
  bool periodic_ = false;
};

inline double free_kernel(const PotentialSpec& pot, double t, double x, double y) {
  return FreeKernel(pot).density(t, x, y);
}

// Compact set over which sup |p_T - 1| is taken: an m-quantile box on the
// line (p_T is unbounded on the line for Ornstein-Uhlenbeck), the whole circle otherwise.
struct ProbeBox {
  double q_lo = 0.16;
  double q_hi = 0.84;
  std::size_t points = 41;
};

struct SupDistance {
  double value = 0.0;
  double T = 0.0;
  double lo = 0.0, hi = 0.0;
  std::size_t points = 0;
  std::string truncation;
};

inline SupDistance kernel_sup_distance(const FreeKernel& k, double T, const ProbeBox& box = {}) {
  require(T > 0, "kernel_sup_distance: T must be positive");
  require(box.points >= 2 && box.q_lo < box.q_hi, "kernel_sup_distance: bad probe box");
  SupDistance r;
  r.T = T;
  r.points = box.points;
  if (k.potential().space == StateSpace::circle) {
    r.lo = 0.0;
    r.hi = kTwoPi * static_cast<double>(box.points - 1) / static_cast<double>(box.points);
    r.truncation = "whole circle, " + std::to_string(box.points) + "^2 grid";
  } else {
    r.lo = k.measure().quantile(box.q_lo);
    r.hi = k.measure().quantile(box.q_hi);
    r.truncation = "m-quantile box [" + std::to_string(box.q_lo) + "," + std::to_string(box.q_hi) + "]^2, " +
                   std::to_string(box.points) + "^2 grid";
  }
  const double step = (r.hi - r.lo) / static_cast<double>(box.points - 1);
  for (std::size_t a = 0; a < box.points; ++a)
    for (std::size_t b = 0; b < box.points; ++b) {
      const double x = r.lo + step * static_cast<double>(a), y = r.lo + step * static_cast<double>(b);
      r.value = std::max(r.value, std::abs(k.density(T, x, y) - 1.0));
    }
  return r;
}

struct DecayFit {
  double rate = 0.0;
  double rate_std_err = 0.0;
  double intercept = 0.0;
  std::vector<double> T;
  std::vector<double> distance;
};

// Least-squares slope of -log sup|p_T - 1| against T.
inline DecayFit fit_kernel_decay(const FreeKernel& k, const std::vector<double>& Ts, const ProbeBox& box = {}) {
  require(Ts.size() >= 2, "fit_kernel_decay: need at least two times");
  DecayFit f;
  std::vector<double> logs;
  for (double T : Ts) {
    const double d = kernel_sup_distance(k, T, box).value;
    if (!(d > 0)) throw NumericalError("fit_kernel_decay: distance underflow at T = " + std::to_string(T));
    f.T.push_back(T);
    f.distance.push_back(d);
    logs.push_back(std::log(d));
  }
  const auto lf = least_squares(f.T, logs);
  f.rate = -lf.slope;
  f.rate_std_err = lf.slope_std_err;
  f.intercept = lf.intercept;
  return f;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k)
    v[k] = n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return v;
}

}  // namespace gibbsprop
