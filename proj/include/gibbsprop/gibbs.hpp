#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/parallel.hpp"
#include "gibbsprop/potential.hpp"
#include "gibbsprop/rng.hpp"
#include "gibbsprop/stats.hpp"

namespace gibbsprop {

using TermEvaluator = std::function<double(std::span<const double>)>;

// phi_A: a function of the values on A (in sorted site order) with a declared sup norm.
struct Term {
  std::string kind;
  Volume support;
  TermEvaluator eval;
  double sup_norm = 0.0;
  double coupling = 0.0;
};

struct SummabilityFlags {
  bool strong_summable = true;  // sup_i sum_{A contains i} (|A| - 1) ||phi_A|| finite
  bool finite_body = true;      // bounded support size
  bool finite_range = true;     // bounded support diameter
  std::size_t max_body = 0;
  int max_diameter = 0;
};

class Interaction {
 public:
  Interaction() = default;
  Interaction(std::vector<Term> terms, double beta0) : terms_(std::move(terms)), beta0_(beta0) {
    require(beta0 >= 0 && std::isfinite(beta0), "interaction: beta0 must be finite and >= 0");
    for (const auto& t : terms_) {
      require(!t.support.empty(), "interaction term '" + t.kind + "' has an empty support");
      require(static_cast<bool>(t.eval), "interaction term '" + t.kind + "' has no evaluator");
      require(t.sup_norm >= 0, "interaction term '" + t.kind + "' has a negative sup norm");
    }
  }

  const std::vector<Term>& terms() const { return terms_; }
  double beta0() const { return beta0_; }
  Interaction with_beta0(double b) const { return Interaction(terms_, b); }
  bool empty() const { return terms_.empty(); }

  // Sites any term touching vol reads.
  Volume reach(const Volume& vol) const {
    Volume r = vol;
    for (const auto& t : terms_)
      if (t.support.intersects(vol)) r = r.unite(t.support);
    return r;
  }

  SummabilityFlags flags() const {
    SummabilityFlags f;
    for (const auto& t : terms_) {
      f.max_body = std::max(f.max_body, t.support.size());
      if (t.support.size() > 1 && !std::isfinite(t.sup_norm)) f.strong_summable = false;
      for (const auto& a : t.support)
        for (const auto& b : t.support)
          for (int k = 0; k < a.dim; ++k) f.max_diameter = std::max(f.max_diameter, std::abs(a[k] - b[k]));
    }
    return f;
  }

 private:
  std::vector<Term> terms_;
  double beta0_ = 0.0;
};

inline double evaluate_term(const Term& t, const Configuration& c) {
  double buf[16];
  require(t.support.size() <= 16, "interaction term support larger than 16 sites");
  for (std::size_t k = 0; k < t.support.size(); ++k) buf[k] = c.at(t.support[k]);
  const double v = t.eval(std::span<const double>(buf, t.support.size()));
  if (!std::isfinite(v)) throw NumericalError("interaction term '" + t.kind + "' returned a non-finite value");
  return v;
}

// Term templates.
inline Term site_tanh(const Site& i, double J) {
  return {"site_tanh", Volume{i}, [J](std::span<const double> v) { return J * std::tanh(v[0]); }, std::abs(J), J};
}
inline Term site_cos(const Site& i, double J) {
  return {"site_cos", Volume{i}, [J](std::span<const double> v) { return J * std::cos(v[0]); }, std::abs(J), J};
}
inline Term pair_tanh(const Site& i, const Site& j, double J) {
  return {"pair_tanh", Volume{i, j}, [J](std::span<const double> v) { return J * std::tanh(v[0]) * std::tanh(v[1]); },
          std::abs(J), J};
}
inline Term pair_cos(const Site& i, const Site& j, double J) {
  return {"pair_cos", Volume{i, j}, [J](std::span<const double> v) { return J * std::cos(v[0] - v[1]); }, std::abs(J),
          J};
}
// Unbounded: declared sup norm is infinite.
inline Term pair_product(const Site& i, const Site& j, double J) {
  return {"pair_product", Volume{i, j}, [J](std::span<const double> v) { return J * v[0] * v[1]; },
          J == 0.0 ? 0.0 : std::numeric_limits<double>::infinity(), J};
}
inline Term plaquette_tanh(const Volume& A, double J) {
  return {"plaquette_tanh", A,
          [J](std::span<const double> v) {
            double p = J;
            for (double x : v) p *= std::tanh(x);
            return p;
          },
          std::abs(J), J};
}

// Pair terms on every nearest-neighbour pair inside vol.
inline std::vector<Term> nearest_neighbor_pairs(const Volume& vol, const std::string& kind, double J) {
  std::vector<Term> out;
  for (const auto& i : vol)
    for (int k = 0; k < i.dim; ++k) {
      Site j = i;
      j.c[static_cast<std::size_t>(k)] += 1;
      if (!vol.contains(j)) continue;
      if (kind == "pair_tanh") out.push_back(pair_tanh(i, j, J));
      else if (kind == "pair_cos") out.push_back(pair_cos(i, j, J));
      else if (kind == "pair_product") out.push_back(pair_product(i, j, J));
      else throw ValidationError("unknown pair template '" + kind + "'");
    }
  return out;
}

inline std::vector<Term> single_site_terms(const Volume& vol, const std::string& kind, double J) {
  std::vector<Term> out;
  for (const auto& i : vol) {
    if (kind == "site_tanh") out.push_back(site_tanh(i, J));
    else if (kind == "site_cos") out.push_back(site_cos(i, J));
    else throw ValidationError("unknown site template '" + kind + "'");
  }
  return out;
}

// Spot check of the declared sup norms on draws from m and on the m-quantile
// extremes; returns the worst observed |phi_A| / ||phi_A|| (must be <= 1).
inline double validate_sup_norms(const Interaction& phi, const PotentialSpec& pot, std::size_t draws,
                                 std::uint64_t seed) {
  const ReferenceMeasure m(pot);
  Rng rng(seed, "validate_sup_norms");
  double worst = 0.0;
  const double ext[] = {m.quantile(1e-6), m.quantile(0.5), m.quantile(1 - 1e-6)};
  for (const auto& t : phi.terms()) {
    std::vector<double> v(t.support.size());
    auto check = [&] {
      const double a = std::abs(t.eval(v));
      if (!std::isfinite(a)) throw NumericalError("interaction term '" + t.kind + "' returned a non-finite value");
      if (a > 0) worst = std::max(worst, t.sup_norm > 0 ? a / t.sup_norm : std::numeric_limits<double>::infinity());
    };
    for (std::size_t r = 0; r < draws; ++r) {
      for (auto& x : v) x = m.sample(rng);
      check();
    }
    for (double e : ext) {
      std::fill(v.begin(), v.end(), e);
      check();
    }
  }
  if (worst > 1.0 + 1e-12)
    throw ValidationError("interaction: a term exceeds its declared sup norm (ratio " + std::to_string(worst) + ")");
  return worst;
}

// h_vol(x_vol, z) = sum over terms A meeting vol of phi_A(x concat z).
inline double hamiltonian(const Interaction& phi, const Volume& vol, const Configuration& x,
                          const Configuration* boundary = nullptr) {
  const Configuration full = boundary ? concat(x.restrict(vol), *boundary) : x;
  double h = 0.0;
  for (const auto& t : phi.terms())
    if (t.support.intersects(vol)) h += evaluate_term(t, full);
  return h;
}

struct DobrushinResult {
  double value = 0.0;
  bool passes = true;
  std::map<Site, double> per_site;
};

// beta0 * sup_i sum_{A contains i} (|A| - 1) ||phi_A||; passes iff < 1.
inline DobrushinResult dobrushin_check(const Interaction& phi) {
  DobrushinResult r;
  for (const auto& t : phi.terms())
    for (const auto& i : t.support) r.per_site[i] += static_cast<double>(t.support.size() - 1) * t.sup_norm;
  double sup = 0.0;
  for (const auto& [i, s] : r.per_site) sup = std::max(sup, s);
  r.value = sup == 0.0 ? 0.0 : phi.beta0() * sup;
  r.passes = r.value < 1.0;
  return r;
}

// Single-site Metropolis for exp(-E(x)) prod m(dx_i) with independence proposals
// from m; E enters only through the local energy of the updated site.
class MetropolisChain {
 public:
  using LocalEnergy = std::function<double(const Configuration&, std::size_t)>;

  MetropolisChain(std::shared_ptr<const ReferenceMeasure> m, Configuration start, LocalEnergy local, Rng rng)
      : m_(std::move(m)), x_(std::move(start)), local_(std::move(local)), rng_(std::move(rng)) {}

  void sweep() {
    for (std::size_t s = 0; s < x_.domain().size(); ++s) {
      const double old_v = x_[s];
      const double e0 = local_(x_, s);
      if (!std::isfinite(e0)) throw NumericalError("Metropolis: non-finite energy");
      x_.set_index(s, m_->sample(rng_));
      const double e1 = local_(x_, s);
      if (!std::isfinite(e1)) throw NumericalError("Metropolis: non-finite energy");
      ++proposed_;
      // The uniform is always drawn so chains with different targets stay aligned.
      const double u = rng_.uniform();
      if (e1 <= e0 || u < std::exp(e0 - e1)) ++accepted_;
      else x_.set_index(s, old_v);
    }
  }
  void run(std::size_t sweeps) {
    for (std::size_t k = 0; k < sweeps; ++k) sweep();
  }

  const Configuration& state() const { return x_; }
  Rng& rng() { return rng_; }
  double acceptance() const { return proposed_ ? static_cast<double>(accepted_) / static_cast<double>(proposed_) : 0.0; }

 private:
  std::shared_ptr<const ReferenceMeasure> m_;
  Configuration x_;
  LocalEnergy local_;
  Rng rng_;
  std::size_t proposed_ = 0, accepted_ = 0;
};

struct GibbsParams {
  std::size_t sweeps = 200;
  std::size_t burn_in = 50;
  std::size_t thin = 2;
};

// Sampler for nu_{vol, z} (free boundary when z is absent).
class GibbsSampler {
 public:
  GibbsSampler(Interaction phi, const PotentialSpec& pot, Volume vol, std::optional<Configuration> boundary = {})
      : phi_(std::move(phi)), m_(std::make_shared<ReferenceMeasure>(pot)), vol_(std::move(vol)),
        boundary_(std::move(boundary)) {
    if (boundary_) require(!boundary_->domain().intersects(vol_), "sample_gibbs: boundary overlaps the volume");
    site_terms_.resize(vol_.size());
    for (std::size_t t = 0; t < phi_.terms().size(); ++t) {
      const auto& term = phi_.terms()[t];
      bool touches = false;
      for (const auto& s : term.support)
        if (auto k = vol_.index_of(s)) {
          site_terms_[*k].push_back(t);
          touches = true;
        }
      if (!touches) continue;
      for (const auto& s : term.support)
        if (!vol_.contains(s) && !(boundary_ && boundary_->domain().contains(s)))
          throw CoverageError("sample_gibbs: term '" + term.kind + "' on " + term.support.str() +
                              " reads site " + s.str() + " outside the volume and the boundary");
    }
  }

  const Volume& volume() const { return vol_; }
  std::shared_ptr<const ReferenceMeasure> measure() const { return m_; }

  // beta0 * sum of terms containing site index s.
  double local_energy(const Configuration& x, std::size_t s) const {
    if (phi_.beta0() == 0.0) return 0.0;
    double e = 0.0;
    for (auto t : site_terms_[s]) {
      const auto& term = phi_.terms()[t];
      double buf[16];
      for (std::size_t k = 0; k < term.support.size(); ++k) {
        const Site& a = term.support[k];
        auto idx = x.domain().index_of(a);
        buf[k] = idx ? x[*idx] : boundary_->at(a);
      }
      e += term.eval(std::span<const double>(buf, term.support.size()));
    }
    return phi_.beta0() * e;
  }

  MetropolisChain chain(std::uint64_t seed, std::uint64_t index) const {
    Rng rng(seed, "gibbs", index);
    Configuration x = Configuration::constant(vol_, 0.0, m_->space());
    for (std::size_t s = 0; s < vol_.size(); ++s) x.set_index(s, m_->sample(rng));
    return MetropolisChain(m_, std::move(x), [this](const Configuration& c, std::size_t s) { return local_energy(c, s); },
                           std::move(rng));
  }

  // One draw: the state after the given number of sweeps.
  Configuration draw(std::size_t sweeps, std::uint64_t seed, std::uint64_t index = 0) const {
    auto c = chain(seed, index);
    c.run(sweeps);
    return c.state();
  }

  // Thinned states after burn-in.
  std::vector<Configuration> samples(const GibbsParams& gp, std::uint64_t seed, std::uint64_t index = 0) const {
    auto c = chain(seed, index);
    c.run(gp.burn_in);
    std::vector<Configuration> out;
    for (std::size_t k = 0; k < gp.sweeps; ++k) {
      c.sweep();
      if ((k + 1) % std::max<std::size_t>(gp.thin, 1) == 0) out.push_back(c.state());
    }
    return out;
  }

 private:
  Interaction phi_;
  std::shared_ptr<const ReferenceMeasure> m_;
  Volume vol_;
  std::optional<Configuration> boundary_;
  std::vector<std::vector<std::size_t>> site_terms_;
};

inline Configuration sample_gibbs(const Interaction& phi, const PotentialSpec& pot, const Volume& vol,
                                  const std::optional<Configuration>& boundary, std::size_t sweeps,
                                  std::uint64_t seed, std::size_t burn_in = 20) {
  if (sweeps < burn_in)
    throw ValidationError("sample_gibbs: " + std::to_string(sweeps) + " sweeps is below the burn-in threshold " +
                          std::to_string(burn_in));
  return GibbsSampler(phi, pot, vol, boundary).draw(sweeps, seed);
}

// Split-chain potential scale reduction of an observable over independent chains.
inline double gibbs_rhat(const GibbsSampler& s, const std::function<double(const Configuration&)>& f,
                         const GibbsParams& gp, std::size_t chains, std::uint64_t seed) {
  std::vector<std::vector<double>> traces;
  for (std::size_t c = 0; c < chains; ++c) {
    std::vector<double> tr;
    for (const auto& x : s.samples(gp, seed, c)) tr.push_back(f(x));
    traces.push_back(std::move(tr));
  }
  return split_rhat(traces);
}

// Local test functions on a sub-volume: x_i, x_i^2 per site (cos, sin on the
// circle) and x_i x_j on nearest-neighbour pairs.
struct TestFunction {
  std::string name;
  std::function<double(const Configuration&)> f;
};

inline std::vector<TestFunction> dlr_battery(const Volume& sub, StateSpace space) {
  std::vector<TestFunction> out;
  for (const auto& i : sub) {
    if (space == StateSpace::circle) {
      out.push_back({"cos" + i.str(), [i](const Configuration& c) { return std::cos(c.at(i)); }});
      out.push_back({"sin" + i.str(), [i](const Configuration& c) { return std::sin(c.at(i)); }});
    } else {
      out.push_back({"x" + i.str(), [i](const Configuration& c) { return c.at(i); }});
      out.push_back({"x2" + i.str(), [i](const Configuration& c) { return c.at(i) * c.at(i); }});
    }
    for (int k = 0; k < i.dim; ++k) {
      Site j = i;
      j.c[static_cast<std::size_t>(k)] += 1;
      if (!sub.contains(j)) continue;
      if (space == StateSpace::circle)
        out.push_back({"cos" + i.str() + j.str(), [i, j](const Configuration& c) { return std::cos(c.at(i) - c.at(j)); }});
      else
        out.push_back({"x" + i.str() + j.str(), [i, j](const Configuration& c) { return c.at(i) * c.at(j); }});
    }
  }
  return out;
}

struct DlrEntry {
  std::string name;
  Estimate direct;       // E f(X_sub) under nu_big
  Estimate two_stage;    // E over z of E_{nu_sub,z} f
  Estimate discrepancy;  // paired difference
};

struct DlrReport {
  std::vector<DlrEntry> entries;
  double max_abs_z = 0.0;
  double acceptance = 0.0;
};

struct DlrParams {
  std::size_t n_outer = 200;     // independent outer chains
  std::size_t n_inner = 20;      // inner draws per outer draw
  std::size_t inner_sweeps = 4;  // sweeps between inner draws
  std::size_t burn_in = 100;
};

// Paired DLR check: for each outer draw z ~ nu_big (one independent chain per
// draw), d = f(z_sub) - mean over inner draws from nu_{sub, z} of f; E d = 0 is
// the DLR identity.
inline DlrReport dlr_test(const Interaction& phi, const PotentialSpec& pot, const Volume& big, const Volume& sub,
                          const DlrParams& dp, std::uint64_t seed) {
  require(sub.subset_of(big), "dlr_test: sub-volume must lie in the big volume");
  if (!phi.reach(sub).subset_of(big))
    throw CoverageError("dlr_test: terms touching the sub-volume reach outside the big volume");
  const GibbsSampler outer(phi, pot, big);
  const auto battery = dlr_battery(sub, pot.space);
  std::vector<std::vector<double>> d(battery.size()), dir(battery.size()), two(battery.size());
  const Volume rest = big.minus(sub);
  require(dp.n_outer >= 2 && dp.n_inner >= 1, "dlr_test: need at least 2 outer and 1 inner draws");
  MeanAccumulator acceptance;
  for (std::size_t r = 0; r < dp.n_outer; ++r) {
    auto oc = outer.chain(seed, 2 * r);
    oc.run(dp.burn_in);
    acceptance.add(oc.acceptance());
    const Configuration z = oc.state();
    const GibbsSampler inner(phi, pot, sub, z.restrict(rest));
    auto ic = inner.chain(seed, 2 * r + 1);
    ic.run(dp.burn_in / 4 + 1);
    std::vector<double> acc(battery.size(), 0.0);
    for (std::size_t k = 0; k < dp.n_inner; ++k) {
      ic.run(std::max<std::size_t>(dp.inner_sweeps, 1));
      const Configuration xs = concat(ic.state(), z.restrict(rest));
      for (std::size_t f = 0; f < battery.size(); ++f) acc[f] += battery[f].f(xs);
    }
    for (std::size_t f = 0; f < battery.size(); ++f) {
      const double direct = battery[f].f(z), inner_mean = acc[f] / static_cast<double>(dp.n_inner);
      dir[f].push_back(direct);
      two[f].push_back(inner_mean);
      d[f].push_back(direct - inner_mean);
    }
  }
  DlrReport rep;
  rep.acceptance = acceptance.mean();
  auto est = [](const std::vector<double>& v) {
    MeanAccumulator a;
    for (double x : v) a.add(x);
    return a.estimate();
  };
  for (std::size_t f = 0; f < battery.size(); ++f) {
    DlrEntry e{battery[f].name, est(dir[f]), est(two[f]), est(d[f])};
    const double z = e.discrepancy.std_err > 0 ? std::abs(e.discrepancy.value) / e.discrepancy.std_err : 0.0;
    rep.max_abs_z = std::max(rep.max_abs_z, z);
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

// CDF of the one-site conditional law exp(-beta0 h_i(x, z)) m(dx) / norm on the measure grid.
class ConditionalCdf {
 public:
  ConditionalCdf(const Interaction& phi, const PotentialSpec& pot, const Site& i, const Configuration& boundary)
      : m_(pot) {
    nodes_ = m_.nodes();
    const auto& w = m_.weights();
    cum_.resize(nodes_.size());
    Configuration x = Configuration::constant(Volume{i}, 0.0, pot.space);
    double s = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      x.set_index(0, nodes_[k]);
      s += w[k] * std::exp(-phi.beta0() * hamiltonian(phi, Volume{i}, x, &boundary));
      cum_[k] = s;
    }
    for (auto& c : cum_) c /= s;
  }
  double operator()(double v) const {
    if (v <= nodes_.front()) return 0.0;
    if (v >= nodes_.back()) return 1.0;
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), v);
    const auto k = static_cast<std::size_t>(it - nodes_.begin());
    const double f = (v - nodes_[k - 1]) / (nodes_[k] - nodes_[k - 1]);
    return cum_[k - 1] + f * (cum_[k] - cum_[k - 1]);
  }

 private:
  ReferenceMeasure m_;
  std::vector<double> nodes_, cum_;
};

// KS test of independent one-site conditional draws against the quadrature CDF.
inline KsResult conditional_ks_test(const Interaction& phi, const PotentialSpec& pot, const Site& i,
                                    const Configuration& boundary, std::size_t n, std::size_t sweeps,
                                    std::uint64_t seed) {
  const GibbsSampler s(phi, pot, Volume{i}, boundary);
  std::vector<double> xs(n);
  for (std::size_t r = 0; r < n; ++r) {
    double v = s.draw(sweeps, seed, r)[0];
    xs[r] = pot.space == StateSpace::circle ? wrap_circle(v) : v;
  }
  const ConditionalCdf cdf(phi, pot, i, boundary);
  return ks_test(xs, [&](double v) { return cdf(v); });
}

}  // namespace gibbsprop
