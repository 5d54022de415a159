#pragma once

#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "gibbsprop/error.hpp"
#include "gibbsprop/kernel.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/potential.hpp"
#include "gibbsprop/rng.hpp"

namespace gibbsprop {

// Draws single-site paths on K steps of size dt from z0 to z1. The returned
// log-weight is 0 for exact samplers; approximate samplers return a weight
// whose mean is (approximately) one, so E[w F] approximates the bridge mean of F.
class BridgeSampler {
 public:
  virtual ~BridgeSampler() = default;
  virtual bool exact() const = 0;
  virtual double sample(double z0, double z1, std::size_t K, double dt, Rng& rng, double* out) const = 0;
};

// Ornstein-Uhlenbeck bridge of dX = -theta X dt + dB (theta = 0: Brownian bridge),
// written as the conditional mean A(s) z0 + B(s) z1 plus a 0 -> 0 bridge drawn
// sequentially. The noise consumed does not depend on the endpoints.
class GaussianBridge final : public BridgeSampler {
 public:
  explicit GaussianBridge(double theta) : theta_(theta) { require(theta >= 0, "GaussianBridge: theta must be >= 0"); }
  bool exact() const override { return true; }

  double sample(double z0, double z1, std::size_t K, double dt, Rng& rng, double* out) const override {
    const auto& c = coeffs(K, dt);
    out[0] = z0;
    double xi = 0.0;
    for (std::size_t k = 0; k + 1 < K; ++k) {
      xi = c.decay[k] * xi + c.sd[k] * rng.normal();
      out[k + 1] = c.a[k + 1] * z0 + c.b[k + 1] * z1 + xi;
    }
    if (K > 0) out[K] = z1;
    return 0.0;
  }

  // Conditional mean of X(s) given X(0) = z0, X(T) = z1.
  double mean(double z0, double z1, double s, double T) const {
    const double b = std::exp(-theta_ * (T - s)) * var(s) / var(T);
    const double a = std::exp(-theta_ * s) - b * std::exp(-theta_ * T);
    return a * z0 + b * z1;
  }

  double var(double tau) const { return theta_ == 0.0 ? tau : -std::expm1(-2.0 * theta_ * tau) / (2.0 * theta_); }

 private:
  struct Coeffs {
    std::vector<double> a, b, decay, sd;
  };

  const Coeffs& coeffs(std::size_t K, double dt) const {
    const auto key = std::make_pair(K, std::bit_cast<std::uint64_t>(dt));
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto c = std::make_unique<Coeffs>();
    const double T = static_cast<double>(K) * dt;
    c->a.resize(K + 1);
    c->b.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
      const double s = static_cast<double>(k) * dt;
      c->b[k] = K == 0 ? 0.0 : std::exp(-theta_ * (T - s)) * var(s) / var(T);
      c->a[k] = std::exp(-theta_ * s) - c->b[k] * std::exp(-theta_ * T);
    }
    const double v1 = var(dt), e1 = std::exp(-theta_ * dt);
    for (std::size_t k = 0; k + 1 < K; ++k) {
      const double rest = static_cast<double>(K - k - 1) * dt;
      const double g = std::exp(-theta_ * rest);
      const double prec = 1.0 / v1 + g * g / var(rest);
      c->decay.push_back(e1 / (v1 * prec));
      c->sd.push_back(1.0 / std::sqrt(prec));
    }
    auto& ref = *c;
    cache_.emplace(key, std::move(c));
    return ref;
  }

  double theta_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<std::size_t, std::uint64_t>, std::unique_ptr<Coeffs>> cache_;
};

// Brownian bridge on the circle: the winding number of the lift is drawn from
// its exact law, then a Brownian bridge joins z0 to the chosen lift of z1.
class CircleBridge final : public BridgeSampler {
 public:
  bool exact() const override { return true; }
  double sample(double z0, double z1, std::size_t K, double dt, Rng& rng, double* out) const override {
    const double T = static_cast<double>(K) * dt;
    const double d = circle_diff(z0, z1);
    const int nmax = 2 + static_cast<int>(std::ceil(4.0 * std::sqrt(T) / kTwoPi));
    std::vector<double> w;
    double tot = 0;
    for (int n = -nmax; n <= nmax; ++n) {
      const double z = d + kTwoPi * n;
      w.push_back(std::exp(-z * z / (2.0 * T)));
      tot += w.back();
    }
    double u = rng.uniform() * tot;
    int pick = nmax;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (u < w[k]) {
        pick = static_cast<int>(k);
        break;
      }
      u -= w[k];
    }
    const double target = z0 + d + kTwoPi * (pick - nmax);
    return bm_.sample(z0, target, K, dt, rng, out);
  }

 private:
  GaussianBridge bm_{0.0};
};

// General potential: forward Euler-Maruyama from z0, weighted by a Gaussian
// kernel of bandwidth h at z1 and divided by p_T(z0, z1) m(z1), the kernel's
// limiting mean. The smoothing bias is O(h^2).
class ForwardKernelBridge final : public BridgeSampler {
 public:
  ForwardKernelBridge(std::shared_ptr<const FreeKernel> kernel, double bandwidth_scale, std::size_t n_ref)
      : kernel_(std::move(kernel)), scale_(bandwidth_scale), n_ref_(std::max<std::size_t>(n_ref, 1)) {
    require(scale_ > 0, "bandwidth scale must be positive");
  }
  bool exact() const override { return false; }

  double bandwidth(double T) const {
    const double s2 = std::min(T, kernel_->measure().variance());
    return scale_ * std::sqrt(s2) * std::pow(static_cast<double>(n_ref_), -0.2);
  }

  double sample(double z0, double z1, std::size_t K, double dt, Rng& rng, double* out) const override {
    const auto& pot = kernel_->potential();
    const double sq = std::sqrt(dt);
    out[0] = z0;
    for (std::size_t k = 0; k < K; ++k) out[k + 1] = out[k] - 0.5 * pot.dU(out[k]) * dt + sq * rng.normal();
    const double T = static_cast<double>(K) * dt;
    const double h = bandwidth(T);
    const double diff = pot.space == StateSpace::circle ? circle_diff(z1, out[K]) : out[K] - z1;
    const double log_kappa = -0.5 * diff * diff / (h * h) - std::log(h * std::sqrt(kTwoPi));
    const double norm = kernel_->density(T, z0, z1) * kernel_->measure().density(z1);
    if (!(norm > 0)) throw NumericalError("bridge: kernel normalization vanished");
    return log_kappa - std::log(norm);
  }

 private:
  std::shared_ptr<const FreeKernel> kernel_;
  double scale_;
  std::size_t n_ref_;
};

inline std::unique_ptr<BridgeSampler> make_bridge_sampler(std::shared_ptr<const FreeKernel> kernel,
                                                          double bandwidth_scale = 1.0, std::size_t n_ref = 1000) {
  const auto& pot = kernel->potential();
  if (pot.is_quadratic()) return std::make_unique<GaussianBridge>(pot.quadratic_rate());
  if (pot.is_free_circle()) return std::make_unique<CircleBridge>();
  return std::make_unique<ForwardKernelBridge>(std::move(kernel), bandwidth_scale, n_ref);
}

}  // namespace gibbsprop
