#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"
#include "gibbsprop/expansion.hpp"
#include "gibbsprop/gibbs.hpp"
#include "gibbsprop/kernel.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/stats.hpp"

namespace gibbsprop {

using VolumePredicate = std::function<bool(const Volume&)>;

// Phi^t_A(x, y) as a function of both configurations.
class DynamicInteraction {
 public:
  virtual ~DynamicInteraction() = default;
  // Sum of Phi_A(x, y) over the supports A accepted by pred.
  virtual double sum(const Configuration& x, const Configuration& y, const VolumePredicate& pred) const = 0;
  // Supports A with a (possibly) nonzero term.
  virtual std::vector<Volume> supports() const = 0;
};

class ZeroDynamicInteraction final : public DynamicInteraction {
 public:
  double sum(const Configuration&, const Configuration&, const VolumePredicate&) const override { return 0.0; }
  std::vector<Volume> supports() const override { return {}; }
};

// Explicit terms Phi_A(x_A, y_A).
class FunctionalDynamicInteraction final : public DynamicInteraction {
 public:
  using Fn = std::function<double(std::span<const double>, std::span<const double>)>;
  struct Entry {
    Volume support;
    Fn fn;
  };
  explicit FunctionalDynamicInteraction(std::vector<Entry> terms) : terms_(std::move(terms)) {}

  double sum(const Configuration& x, const Configuration& y, const VolumePredicate& pred) const override {
    double s = 0.0;
    for (const auto& t : terms_) {
      if (!pred(t.support)) continue;
      std::vector<double> xa, ya;
      for (const auto& i : t.support) {
        xa.push_back(x.at(i));
        ya.push_back(y.at(i));
      }
      s += t.fn(xa, ya);
    }
    return s;
  }
  std::vector<Volume> supports() const override {
    std::vector<Volume> v;
    for (const auto& t : terms_) v.push_back(t.support);
    return v;
  }

 private:
  std::vector<Entry> terms_;
};

// Phi from the truncated cluster expansion, evaluated on demand. Weights use
// common random numbers per cluster, so Phi is a deterministic function of
// (x, y); each weight is cached on the values it reads.
class ExpansionDynamicInteraction final : public DynamicInteraction {
 public:
  ExpansionDynamicInteraction(std::shared_ptr<const WeightEngine> engine, int nMax, std::uint64_t seed)
      : engine_(std::move(engine)), seed_(seed), nmax_(nMax) {
    const auto& U = engine_->universe();
    std::vector<std::size_t> act;
    for (std::size_t p = 0; p < U.size(); ++p)
      if (!engine_->structural_zero(p)) act.push_back(p);
    collections_ = connected_collections(U, act, nMax);
    for (std::size_t p = 0; p < U.size(); ++p) reach_.push_back(U.reach(p));
    cache_.resize(U.size());
  }

  double sum(const Configuration& x, const Configuration& y, const VolumePredicate& pred) const override {
    double s = 0.0;
    for (const auto& c : collections_) {
      if (!pred(c.reach)) continue;
      double prod = c.coefficient.value();
      for (std::size_t a = 0; a < c.polymers.size(); ++a) prod *= std::pow(weight(c.polymers[a], x, y), c.multiplicity[a]);
      s -= prod;
    }
    return s;
  }

  std::vector<Volume> supports() const override {
    std::set<Volume> v;
    for (const auto& c : collections_) v.insert(c.reach);
    return {v.begin(), v.end()};
  }

  const WeightEngine& engine() const { return *engine_; }
  std::size_t collection_count() const { return collections_.size(); }

 private:
  double weight(std::size_t p, const Configuration& x, const Configuration& y) const {
    std::vector<double> key;
    for (const auto& i : reach_[p]) {
      key.push_back(x.at(i));
      key.push_back(y.at(i));
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_[p].find(key);
      if (it != cache_[p].end()) return it->second;
    }
    const double w = engine_->weight(p, x, y, seed_).value;
    std::lock_guard<std::mutex> lock(mu_);
    if (cache_[p].size() > 20000) cache_[p].clear();
    cache_[p].emplace(std::move(key), w);
    return w;
  }

  std::shared_ptr<const WeightEngine> engine_;
  std::uint64_t seed_;
  int nmax_;
  std::vector<Collection> collections_;
  std::vector<Volume> reach_;
  mutable std::mutex mu_;
  mutable std::vector<std::map<std::vector<double>, double>> cache_;
};

// Initial interaction, dynamic interaction and free kernel at time t.
struct BiSpaceInteraction {
  Interaction initial;
  std::shared_ptr<const DynamicInteraction> dynamic = std::make_shared<ZeroDynamicInteraction>();
  std::shared_ptr<const FreeKernel> kernel;
  double t = 1.0;

  double log_kernel(double x, double y) const {
    const double p = kernel->density(t, x, y);
    if (!(p > 0) || !std::isfinite(p))
      throw NumericalError("bi-space: free kernel p_t(" + std::to_string(x) + ", " + std::to_string(y) +
                           ") is not positive");
    return std::log(p);
  }
};

// beta0 h_Delta(x) - sum_{i in Delta u Delta'} log p_t(x_i, y_i) + sum_{A meets Delta u Delta'} Phi_A(x, y).
inline double bispace_hamiltonian(const BiSpaceInteraction& b, const Volume& delta, const Volume& delta2,
                                  const Configuration& x, const Configuration& y) {
  const Volume both = delta.unite(delta2);
  double h = delta.empty() ? 0.0 : b.initial.beta0() * hamiltonian(b.initial, delta, x);
  for (const auto& i : both) h -= b.log_kernel(x.at(i), y.at(i));
  if (!both.empty()) h += b.dynamic->sum(x, y, [&](const Volume& A) { return A.intersects(both); });
  return h;
}

struct ConditionalParams {
  std::size_t chains = 16;
  std::size_t burn_in = 40;
  std::size_t draws = 20;  // per chain
  std::size_t thin = 2;
  std::size_t companions = 4;  // z' ~ m per draw for the normalizer
  unsigned threads = 1;
};

namespace detail {

// Per-chain sums of numerator F(x, z) and companion F(x, z') for the ratio estimator.
struct ChainSums {
  std::vector<double> num, den;
};

// Sites of W outside lam carry y; lam carries z. Samples x from
//   Q(dx) ~ exp(-beta0 h_W(x) + sum_{i notin lam} log p_t(x_i, y_i) - sum_{A misses lam} Phi_A(x, y)) m(dx)
// and averages F(x, z) = prod_{i in lam} p_t(x_i, z_i) exp(-sum_{A meets lam} Phi_A(x, z y)).
inline ChainSums conditional_chains(const BiSpaceInteraction& b, const Volume& W, const Volume& lam,
                                    const Configuration& z, const Configuration& y_out, const ConditionalParams& cp,
                                    std::uint64_t seed) {
  require(lam.subset_of(W), "conditional_density: Lambda must lie in the window");
  const Volume outside = W.minus(lam);
  require(y_out.domain() == outside, "conditional_density: boundary must cover the window outside Lambda");
  const GibbsSampler gs(b.initial, b.kernel->potential(), W);
  const auto m = gs.measure();
  const Configuration y_full = concat(z.restrict(lam), y_out);
  auto misses = [&](const Volume& A) { return !A.intersects(lam); };
  auto meets = [&](const Volume& A) { return A.intersects(lam); };
  ChainSums out{std::vector<double>(cp.chains, 0.0), std::vector<double>(cp.chains, 0.0)};
  parallel_for(cp.chains, cp.threads, [&](std::size_t c) {
    auto local = [&](const Configuration& x, std::size_t s) {
      const Site& i = W[s];
      double e = gs.local_energy(x, s);
      if (!lam.contains(i)) e -= b.log_kernel(x[s], y_out.at(i));
      e += b.dynamic->sum(x, y_full, [&](const Volume& A) { return misses(A) && A.contains(i); });
      return e;
    };
    Rng rng(seed, "qtilde", c);
    Configuration x0 = Configuration::constant(W, 0.0, m->space());
    for (std::size_t s = 0; s < W.size(); ++s) x0.set_index(s, m->sample(rng));
    MetropolisChain chain(m, std::move(x0), local, std::move(rng));
    chain.run(cp.burn_in);
    Rng comp(seed, "companion", c);
    auto F = [&](const Configuration& x, const Configuration& zz) {
      double lf = 0.0;
      for (const auto& i : lam) lf += b.log_kernel(x.at(i), zz.at(i));
      lf -= b.dynamic->sum(x, concat(zz.restrict(lam), y_out), meets);
      return std::exp(lf);
    };
    Configuration zc = z.restrict(lam);
    for (std::size_t d = 0; d < cp.draws; ++d) {
      chain.run(std::max<std::size_t>(cp.thin, 1));
      const Configuration& x = chain.state();
      out.num[c] += F(x, z);
      for (std::size_t k = 0; k < cp.companions; ++k) {
        for (std::size_t s = 0; s < lam.size(); ++s) zc.set_index(s, m->sample(comp));
        out.den[c] += F(x, zc) / static_cast<double>(cp.companions);
      }
    }
  });
  return out;
}

// Ratio of sums with a chain-level delta-method error.
inline Estimate ratio_estimate(const ChainSums& s) {
  const std::size_t n = s.num.size();
  double N = 0, D = 0;
  for (std::size_t c = 0; c < n; ++c) {
    N += s.num[c];
    D += s.den[c];
  }
  if (!(D > 0)) throw PrecisionError("conditional_density: companion normalizer is zero");
  const double g = N / D;
  MeanAccumulator lin;
  for (std::size_t c = 0; c < n; ++c) lin.add((s.num[c] - g * s.den[c]) / (D / static_cast<double>(n)));
  return {g, lin.std_err(), n, false};
}

}  // namespace detail

// g^{t, y}_lam(z): density of y_lam at z given y outside lam, relative to m^lam,
// within the window W.
inline Estimate conditional_density(const BiSpaceInteraction& b, const Volume& W, const Volume& lam,
                                    const Configuration& z, const Configuration& y_out, const ConditionalParams& cp,
                                    std::uint64_t seed) {
  return detail::ratio_estimate(detail::conditional_chains(b, W, lam, z, y_out, cp, seed));
}

struct QuasilocalityPoint {
  Volume delta;
  double variation = 0.0;  // sup over variants of |g(y) - g(y')|
  double std_err = 0.0;    // of the maximizing difference
  double max_z = 0.0;      // largest |difference| / stderr over variants
};

struct QuasilocalityCurve {
  std::vector<QuasilocalityPoint> points;
  double noise_floor = 0.0;  // median stderr of the differences
  bool non_increasing = true;  // within 2 combined stderr
};

// For each Delta (sites outside lam where boundaries agree), the variation of
// g(z) between the base boundary y and each variant taken equal to y on Delta.
// All boundaries share the chain noise.
inline QuasilocalityCurve quasilocality_probe(const BiSpaceInteraction& b, const Volume& W, const Volume& lam,
                                              const Configuration& z, const Configuration& y_base,
                                              const std::vector<Configuration>& variants,
                                              const std::vector<Volume>& deltas, const ConditionalParams& cp,
                                              std::uint64_t seed) {
  for (std::size_t k = 1; k < deltas.size(); ++k)
    require(deltas[k - 1].subset_of(deltas[k]), "quasilocality_probe: Delta sequence must be increasing");
  const auto base = detail::conditional_chains(b, W, lam, z, y_base, cp, seed);
  const Estimate gb = detail::ratio_estimate(base);
  QuasilocalityCurve curve;
  std::vector<double> errs;
  for (const auto& delta : deltas) {
    QuasilocalityPoint pt{delta, 0.0, 0.0, 0.0};
    for (const auto& v : variants) {
      Configuration yv = v;
      for (const auto& i : delta)
        if (yv.domain().contains(i)) yv.set(i, y_base.at(i));
      const auto s = detail::conditional_chains(b, W, lam, z, yv, cp, seed);
      const Estimate gv = detail::ratio_estimate(s);
      const double D1 = std::accumulate(base.den.begin(), base.den.end(), 0.0) / static_cast<double>(cp.chains);
      const double D2 = std::accumulate(s.den.begin(), s.den.end(), 0.0) / static_cast<double>(cp.chains);
      MeanAccumulator lin;
      for (std::size_t c = 0; c < cp.chains; ++c)
        lin.add((base.num[c] - gb.value * base.den[c]) / D1 - (s.num[c] - gv.value * s.den[c]) / D2);
      const double diff = std::abs(gb.value - gv.value), se = lin.std_err();
      errs.push_back(se);
      if (diff >= pt.variation) {
        pt.variation = diff;
        pt.std_err = se;
      }
      if (se > 0) pt.max_z = std::max(pt.max_z, diff / se);
    }
    curve.points.push_back(pt);
  }
  if (!errs.empty()) {
    std::sort(errs.begin(), errs.end());
    curve.noise_floor = errs[errs.size() / 2];
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto &a = curve.points[k - 1], &c = curve.points[k];
    if (c.variation > a.variation + 2.0 * std::hypot(a.std_err, c.std_err)) curve.non_increasing = false;
  }
  return curve;
}

}  // namespace gibbsprop
