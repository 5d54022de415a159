#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/rng.hpp"

namespace gibbsprop {

// Self-potential U of the free single-site dynamics dX = dB - U'(X)/2 dt.
struct PotentialSpec {
  enum class Kind { quadratic, circle_free, polynomial, fourier };

  Kind kind = Kind::quadratic;
  StateSpace space = StateSpace::line;
  std::string name;
  std::function<double(double)> U;
  std::function<double(double)> dU;
  std::optional<double> gap_hint;
  // quadratic: {a} for U = a x^2; polynomial: c_k of x^k; fourier: c_k of cos(k x), k >= 1.
  std::vector<double> coeffs;

  // U(x) = a x^2: an Ornstein-Uhlenbeck process with rate a, m = N(0, 1/(2a)).
  static PotentialSpec quadratic(double a = 1.0) {
    require(a > 0 && std::isfinite(a), "quadratic potential needs a > 0");
    PotentialSpec p;
    p.kind = Kind::quadratic;
    p.name = "quadratic";
    p.coeffs = {a};
    p.U = [a](double x) { return a * x * x; };
    p.dU = [a](double x) { return 2.0 * a * x; };
    p.gap_hint = a;
    return p;
  }

  // Brownian motion on the circle; m uniform.
  static PotentialSpec circle_free() {
    PotentialSpec p;
    p.kind = Kind::circle_free;
    p.space = StateSpace::circle;
    p.name = "circle_free";
    p.U = [](double) { return 0.0; };
    p.dU = [](double) { return 0.0; };
    p.gap_hint = 0.5;
    return p;
  }

  // U(x) = sum_k c_k x^k on the line.
  static PotentialSpec polynomial(std::vector<double> c) {
    require(!c.empty(), "polynomial potential needs coefficients");
    PotentialSpec p;
    p.kind = Kind::polynomial;
    p.name = "polynomial";
    p.coeffs = c;
    p.U = [c](double x) {
      double s = 0;
      for (std::size_t k = c.size(); k-- > 0;) s = s * x + c[k];
      return s;
    };
    p.dU = [c](double x) {
      double s = 0;
      for (std::size_t k = c.size(); k-- > 1;) s = s * x + static_cast<double>(k) * c[k];
      return s;
    };
    return p;
  }

  // U(x) = x^4/4 - x^2/2.
  static PotentialSpec double_well() {
    auto p = polynomial({0.0, 0.0, -0.5, 0.0, 0.25});
    p.name = "double_well";
    return p;
  }

  // U(x) = sum_k c_k cos(k x) on the circle.
  static PotentialSpec fourier(std::vector<double> c) {
    PotentialSpec p;
    p.kind = Kind::fourier;
    p.space = StateSpace::circle;
    p.name = "fourier";
    p.coeffs = c;
    p.U = [c](double x) {
      double s = 0;
      for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * std::cos(static_cast<double>(k + 1) * x);
      return s;
    };
    p.dU = [c](double x) {
      double s = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        const double kk = static_cast<double>(k + 1);
        s -= kk * c[k] * std::sin(kk * x);
      }
      return s;
    };
    return p;
  }

  bool is_quadratic() const { return kind == Kind::quadratic; }
  bool is_free_circle() const { return kind == Kind::circle_free; }
  bool has_exact_bridge() const { return is_quadratic() || is_free_circle(); }
  double quadratic_rate() const { return is_quadratic() ? coeffs.at(0) : 0.0; }

  double second_derivative(double x) const {
    const double h = 1e-4 * std::max(1.0, std::abs(x));
    return (dU(x + h) - dU(x - h)) / (2.0 * h);
  }
};

// The reference measure m(dx) = exp(-U(x)) dx / Z, tabulated on a grid.
class ReferenceMeasure {
 public:
  static constexpr double kTailMass = 1e-8;

  explicit ReferenceMeasure(const PotentialSpec& pot, std::size_t grid_points = 20001) : pot_(pot) {
    require(static_cast<bool>(pot.U), "ReferenceMeasure: potential has no U");
    if (pot.space == StateSpace::circle) {
      lo_ = 0.0;
      hi_ = kTwoPi;
      tabulate(grid_points, true);
      trunc_lo_ = 0.0;
      trunc_hi_ = kTwoPi;
      return;
    }
    // Grow a symmetric window until the mass outside half of it is negligible.
    double L = 1.0;
    for (;; L *= 2.0) {
      if (L > 8192.0) throw ValidationError("potential '" + pot.name + "' is not normalizable (exp(-U) has heavy tails)");
      lo_ = -2.0 * L;
      hi_ = 2.0 * L;
      tabulate(4001, false);
      const double outer = 1.0 - (cdf(L) - cdf(-L));
      if (outer < 1e-14) break;
    }
    lo_ = -L;
    hi_ = L;
    tabulate(grid_points, false);
    trunc_lo_ = quantile(0.5 * kTailMass);
    trunc_hi_ = quantile(1.0 - 0.5 * kTailMass);
  }

  const PotentialSpec& potential() const { return pot_; }
  StateSpace space() const { return pot_.space; }

  // Lebesgue density of m.
  double density(double x) const {
    if (pot_.space == StateSpace::circle) x = wrap_circle(x);
    return std::exp(-(pot_.U(x) - shift_)) / z_;
  }
  double log_normalizer() const { return std::log(z_) - shift_; }

  double cdf(double x) const {
    if (pot_.space == StateSpace::circle) x = wrap_circle(x);
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const double u = (x - lo_) / h_;
    const auto k = std::min(static_cast<std::size_t>(u), cum_.size() - 2);
    const double f = u - static_cast<double>(k);
    return cum_[k] + f * (cum_[k + 1] - cum_[k]);
  }

  double quantile(double p) const {
    p = std::clamp(p, 0.0, 1.0);
    auto it = std::lower_bound(cum_.begin(), cum_.end(), p);
    if (it == cum_.begin()) return lo_;
    if (it == cum_.end()) return hi_;
    const auto k = static_cast<std::size_t>(it - cum_.begin());
    const double c0 = cum_[k - 1], c1 = cum_[k];
    const double f = c1 > c0 ? (p - c0) / (c1 - c0) : 0.0;
    return lo_ + (static_cast<double>(k - 1) + f) * h_;
  }

  // Interval carrying all but kTailMass of m (the whole circle for circle spaces).
  double truncation_lo() const { return trunc_lo_; }
  double truncation_hi() const { return trunc_hi_; }

  double sample(Rng& rng) const {
    switch (pot_.kind) {
      case PotentialSpec::Kind::quadratic:
        return rng.normal() / std::sqrt(2.0 * pot_.quadratic_rate());
      case PotentialSpec::Kind::circle_free:
        return rng.uniform() * kTwoPi;
      default: {
        const double x = quantile(rng.uniform_open());
        return pot_.space == StateSpace::circle ? wrap_circle(x) : x;
      }
    }
  }

  // Integral of g against m by the tabulated rule.
  template <class G>
  double integrate(G&& g) const {
    double s = 0.0;
    for (std::size_t k = 0; k < w_.size(); ++k) s += w_[k] * g(lo_ + static_cast<double>(k) * h_);
    return s;
  }
  // Quadrature nodes and weights (weights sum to one).
  std::vector<double> nodes() const {
    std::vector<double> x(w_.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = lo_ + static_cast<double>(k) * h_;
    return x;
  }
  const std::vector<double>& weights() const { return w_; }

  double mean() const { return integrate([](double x) { return x; }); }
  double variance() const {
    const double mu = mean();
    return integrate([mu](double x) { return (x - mu) * (x - mu); });
  }

 private:
  void tabulate(std::size_t n, bool periodic) {
    n = std::max<std::size_t>(n, 11);
    std::vector<double> u(n);
    h_ = (hi_ - lo_) / static_cast<double>(n - 1);
    shift_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      u[k] = pot_.U(lo_ + static_cast<double>(k) * h_);
      if (!std::isfinite(u[k])) throw ValidationError("potential '" + pot_.name + "' is not finite on its domain");
      shift_ = std::min(shift_, u[k]);
    }
    w_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double wk = std::exp(-(u[k] - shift_)) * h_;
      // Periodic rule drops the duplicated endpoint; otherwise trapezoid.
      if (periodic && k == n - 1) wk = 0.0;
      else if (!periodic && (k == 0 || k == n - 1)) wk *= 0.5;
      w_[k] = wk;
    }
    z_ = 0.0;
    for (double w : w_) z_ += w;
    cum_.assign(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
      const double a = std::exp(-(u[k - 1] - shift_)), b = std::exp(-(u[k] - shift_));
      cum_[k] = cum_[k - 1] + 0.5 * (a + b) * h_;
    }
    const double total = cum_.back();
    for (double& c : cum_) c /= total;
    for (double& w : w_) w /= z_;
    z_ = total;
  }

  PotentialSpec pot_;
  double lo_ = 0, hi_ = 0, h_ = 0;
  double shift_ = 0, z_ = 1;
  double trunc_lo_ = 0, trunc_hi_ = 0;
  std::vector<double> w_;
  std::vector<double> cum_;
};

inline std::vector<double> sample_reference(const PotentialSpec& pot, std::size_t n, std::uint64_t seed) {
  ReferenceMeasure m(pot);
  Rng rng(seed, "sample_reference");
  std::vector<double> out(n);
  for (auto& v : out) v = m.sample(rng);
  return out;
}

// Numerical check of three sufficient conditions for ultracontractivity:
// (1) liminf U'' > 0 at infinity, (2) U'' - U'^2/2 bounded above,
// (3) integral of 1/U' over the tails finite. Findings are warnings.
struct UltracontractivityReport {
  bool convex_at_infinity = true;
  bool bounded_above = true;
  bool integrable_tails = true;
  std::vector<std::string> warnings;
  bool all() const { return convex_at_infinity && bounded_above && integrable_tails; }
};

inline UltracontractivityReport check_ultracontractivity(const PotentialSpec& pot, double radius = 64.0) {
  UltracontractivityReport r;
  if (pot.space == StateSpace::circle) return r;  // compact state space
  // (1) sample U'' at growing |x|.
  double min_far = std::numeric_limits<double>::infinity();
  for (double x = radius / 4; x <= radius; x *= 1.25) {
    min_far = std::min({min_far, pot.second_derivative(x), pot.second_derivative(-x)});
  }
  if (!(min_far > 0)) {
    r.convex_at_infinity = false;
    r.warnings.push_back("U'' is not positive at large |x| on the check grid");
  }
  // (2) the quantity should not grow towards the grid edges.
  auto q = [&](double x) {
    const double d = pot.dU(x);
    return pot.second_derivative(x) - 0.5 * d * d;
  };
  double inner = -std::numeric_limits<double>::infinity(), outer = inner;
  for (double x = -radius; x <= radius; x += radius / 512) {
    double& slot = std::abs(x) <= radius / 2 ? inner : outer;
    slot = std::max(slot, q(x));
  }
  if (!(outer <= std::max(inner, 0.0) + 1e-9)) {
    r.bounded_above = false;
    r.warnings.push_back("U'' - U'^2/2 grows towards the edge of the check grid");
  }
  // (3) tail integrals over dyadic shells must shrink geometrically.
  auto shell = [&](double a, double b) {
    const int n = 256;
    const double h = (b - a) / n;
    double s = 0;
    for (int k = 0; k < n; ++k) {
      const double x = a + (k + 0.5) * h;
      s += h * (1.0 / std::abs(pot.dU(x)) + 1.0 / std::abs(pot.dU(-x)));
    }
    return s;
  };
  const double s1 = shell(radius / 8, radius / 4), s2 = shell(radius / 4, radius / 2), s3 = shell(radius / 2, radius);
  if (!(std::isfinite(s1) && s3 < 0.75 * s2 && s2 < 0.75 * s1)) {
    r.integrable_tails = false;
    r.warnings.push_back("1/U' does not appear integrable at infinity");
  }
  return r;
}

}  // namespace gibbsprop
