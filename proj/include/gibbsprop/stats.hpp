#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"

namespace gibbsprop {

// A Monte Carlo value with its standard error. Exact values carry std_err = 0
// and exact = true.
struct Estimate {
  double value = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
  bool exact = false;

  static Estimate exact_value(double v) { return {v, 0.0, 0, true}; }

  // Standardized difference; infinite when both sides are exact and differ.
  double z_against(const Estimate& other) const {
    const double d = value - other.value;
    const double s = std::hypot(std_err, other.std_err);
    if (s == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / s;
  }
  double z_against(double target) const { return z_against(exact_value(target)); }
};

// Welford running mean and variance.
class MeanAccumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  void merge(const MeanAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_err() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  Estimate estimate() const { return {mean_, std_err(), n_, false}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Mean of exp(l_k) computed with a max shift so large exponents do not overflow.
struct LogMean {
  double log_value = -std::numeric_limits<double>::infinity();
  double value = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
};

inline LogMean log_mean_exp(std::span<const double> logs) {
  LogMean r;
  r.n = logs.size();
  if (logs.empty()) return r;
  const double shift = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(shift)) {
    if (shift < 0) return r;
    throw NumericalError("log_mean_exp: non-finite log value");
  }
  MeanAccumulator acc;
  for (double l : logs) acc.add(std::exp(l - shift));
  r.log_value = std::log(acc.mean()) + shift;
  r.value = std::exp(r.log_value);
  r.std_err = acc.std_err() * std::exp(shift);
  return r;
}

// Self-normalized importance-sampling mean sum(w g) / sum(w) with delta-method
// standard error and Kish effective sample size.
struct WeightedMean {
  double value = 0.0;
  double std_err = 0.0;
  double ess = 0.0;
  std::size_t n = 0;
};

inline WeightedMean self_normalized_mean(std::span<const double> log_w, std::span<const double> g) {
  WeightedMean r;
  r.n = g.size();
  if (g.empty()) return r;
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(shift)) return r;
  double sw = 0, sw2 = 0, swg = 0;
  std::vector<double> w(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    w[k] = std::exp(log_w[k] - shift);
    sw += w[k];
    sw2 += w[k] * w[k];
    swg += w[k] * g[k];
  }
  r.value = swg / sw;
  double v = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = g[k] - r.value;
    v += w[k] * w[k] * d * d;
  }
  r.std_err = std::sqrt(v) / sw;
  r.ess = sw * sw / sw2;
  return r;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Asymptotic Kolmogorov distribution tail P(K > x).
inline double kolmogorov_tail(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // Theta-function form converges fast for small x.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double a = (2 * k - 1);
      s += std::exp(-a * a * pi2 / (8.0 * x * x));
    }
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value uses
// the Stephens finite-sample correction of the asymptotic distribution.
template <class Cdf>
KsResult ks_test(std::vector<double> xs, Cdf&& cdf) {
  KsResult r;
  r.n = xs.size();
  if (xs.empty()) return r;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double f = cdf(xs[k]);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_err = 0.0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  require(sxx > 0, "least_squares: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double e = y[k] - f.intercept - f.slope * x[k];
      rss += e * e;
    }
    f.slope_std_err = std::sqrt(rss / (n - 2) / sxx);
  }
  return f;
}

// Batch-means standard error for a correlated series.
inline Estimate batch_means(std::span<const double> xs, std::size_t batches = 20) {
  Estimate e;
  e.n = xs.size();
  if (xs.empty()) return e;
  batches = std::max<std::size_t>(2, std::min(batches, xs.size()));
  const std::size_t len = xs.size() / batches;
  MeanAccumulator all, bm;
  for (double x : xs) all.add(x);
  for (std::size_t b = 0; b < batches; ++b) {
    MeanAccumulator a;
    for (std::size_t k = b * len; k < (b + 1) * len; ++k) a.add(xs[k]);
    bm.add(a.mean());
  }
  e.value = all.mean();
  e.std_err = bm.std_err();
  return e;
}

// Split-chain potential scale reduction factor over equal-length chains.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) continue;
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
    halves.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(h),
                        c.begin() + static_cast<std::ptrdiff_t>(2 * h));
  }
  require(halves.size() >= 2, "split_rhat: chains too short");
  const std::size_t n = halves.front().size();
  MeanAccumulator means;
  double w = 0.0;
  for (const auto& h : halves) {
    MeanAccumulator a;
    for (std::size_t k = 0; k < n; ++k) a.add(h[k]);
    means.add(a.mean());
    w += a.variance();
  }
  w /= static_cast<double>(halves.size());
  const double b = static_cast<double>(n) * means.variance();
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w + b / static_cast<double>(n);
  return std::sqrt(var_plus / w);
}

}  // namespace gibbsprop
