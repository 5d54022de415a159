#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "gibbsprop/bridge.hpp"
#include "gibbsprop/clusters.hpp"
#include "gibbsprop/drift.hpp"
#include "gibbsprop/error.hpp"
#include "gibbsprop/girsanov.hpp"
#include "gibbsprop/kernel.hpp"
#include "gibbsprop/parallel.hpp"
#include "gibbsprop/rng.hpp"
#include "gibbsprop/stats.hpp"
#include "gibbsprop/ursell.hpp"

namespace gibbsprop {

// Cluster weights K_Gamma(x, y) for one drift, volume and time grid.
//
// Layer values at levels 1..M-1 are drawn i.i.d. from m; levels 0 and M are
// pinned to x and y. A time edge (i, j) carries q_j - 1 with the Doob transition
//   q_j(z, z') = p_T(z, z') p_{t-(j+1)T}(z', y_i) / p_{t-jT}(z, y_i),
// so that prod_j q_j is the law of the bridge layers relative to m. A space
// edge (k, j) carries exp(-Psi_{k, j}) - 1 on the slice bridges of k + N.
class WeightEngine {
 public:
  WeightEngine(DriftSpec drift, std::shared_ptr<const FreeKernel> kernel, const Volume& vol, TimeGrid grid, int kMax,
               MCParams mc, std::size_t budget = 200000)
      : drift_(std::move(drift)), kernel_(std::move(kernel)),
        sampler_(make_bridge_sampler(kernel_, mc.bandwidth_scale, mc.samples)), mc_(mc),
        universe_(std::make_shared<ClusterUniverse>(vol, ClusterGeometry{drift_.nbhd, grid, drift_.memory}, kMax,
                                                    budget)) {
    slice_steps_ = steps_for(grid.T, mc.dt, "time step T");
    require(slice_steps_ >= 1, "time step T must cover at least one dt");
    plans_.reserve(universe_->size());
    for (std::size_t p = 0; p < universe_->size(); ++p) plans_.push_back(make_plan(p));
  }

  WeightEngine(DriftSpec drift, const PotentialSpec& pot, const Volume& vol, TimeGrid grid, int kMax, MCParams mc,
               std::size_t budget = 200000)
      : WeightEngine(std::move(drift), std::make_shared<const FreeKernel>(pot), vol, grid, kMax, mc, budget) {}

  const ClusterUniverse& universe() const { return *universe_; }
  std::shared_ptr<const ClusterUniverse> universe_ptr() const { return universe_; }
  const DriftSpec& drift() const { return drift_; }
  const FreeKernel& kernel() const { return *kernel_; }
  const MCParams& mc() const { return mc_; }
  const TimeGrid& grid() const { return universe_->geometry().grid; }
  double slice_length() const { return static_cast<double>(slice_steps_) * mc_.dt; }

  // Weights that vanish identically: pure time clusters (the last layer of a
  // time cluster integrates q_j - 1 to zero) and anything with a space edge at beta = 0.
  bool structural_zero(std::size_t p) const { return universe_->pure_time(p) || drift_.beta == 0.0; }

  // Monte Carlo estimate of K for polymer p; the noise stream depends only on
  // the polymer and the seed, so estimates at different (x, y) share it.
  Estimate weight(std::size_t p, const Configuration& x, const Configuration& y, std::uint64_t seed,
                  bool analytic_zeros = true) const {
    if (analytic_zeros && structural_zero(p)) return Estimate::exact_value(0.0);
    return integrate(p, x, y, seed, false);
  }

  // Mean of |prod of edge factors|, used for the space factor C1.
  Estimate absolute_weight(std::size_t p, const Configuration& x, const Configuration& y, std::uint64_t seed) const {
    if (drift_.beta == 0.0 && !universe_->pure_time(p)) return Estimate::exact_value(0.0);
    return integrate(p, x, y, seed, true);
  }

 private:
  struct Plan {
    std::vector<TemporalEdge> space, time;
    std::vector<Vertex> free_vertices;
    std::vector<TemporalEdge> bridges;  // sorted by (site, slice)
    Volume path_sites;
    std::uint64_t stream = 0;
  };

  Plan make_plan(std::size_t p) const {
    Plan pl;
    const int M = grid().M;
    std::set<Vertex> verts;
    std::set<std::pair<Site, int>> bridges;
    std::vector<Site> path_sites;
    for (auto e : universe_->polymer_edges(p)) {
      const auto& te = universe_->edge(e);
      if (universe_->is_space_edge(e)) {
        pl.space.push_back(te);
        for (const auto& o : drift_.nbhd.offsets()) {
          const Site i = te.site + o;
          path_sites.push_back(i);
          bridges.insert({i, te.slice});
          if (drift_.memory > 0 && te.slice >= 1) bridges.insert({i, te.slice - 1});
        }
      } else {
        pl.time.push_back(te);
        if (te.slice >= 1) verts.insert({te.site, te.slice});
        verts.insert({te.site, te.slice + 1});
      }
    }
    for (const auto& [i, j] : bridges) {
      pl.bridges.push_back({i, j});
      if (j >= 1) verts.insert({i, j});
      if (j + 1 <= M - 1) verts.insert({i, j + 1});
    }
    pl.free_vertices.assign(verts.begin(), verts.end());
    pl.path_sites = Volume(std::move(path_sites));
    pl.stream = fnv1a(universe_->cluster(p).key());
    return pl;
  }

  Estimate integrate(std::size_t p, const Configuration& x, const Configuration& y, std::uint64_t seed,
                     bool absolute) const {
    const Plan& pl = plans_[p];
    const std::size_t n = mc_.samples;
    std::vector<double> vals(n);
    parallel_for(n, mc_.threads, [&](std::size_t r) {
      Rng rng(combine_seed(seed, pl.stream), "weight", r);
      vals[r] = sample(pl, x, y, rng, absolute);
    });
    MeanAccumulator acc;
    for (double v : vals) acc.add(v);
    return acc.estimate();
  }

  double sample(const Plan& pl, const Configuration& x, const Configuration& y, Rng& rng, bool absolute) const {
    const int M = grid().M;
    const double dt = mc_.dt;
    const long Ks = slice_steps_;
    const double T = slice_length();
    std::map<Vertex, double> val;
    for (const auto& v : pl.free_vertices) val[v] = kernel_->measure().sample(rng);
    auto vertex = [&](const Site& s, int level) {
      if (level == 0) return x.at(s);
      if (level == M) return y.at(s);
      return val.at({s, level});
    };
    double lw = 0.0;
    double prod = 1.0;
    if (!pl.space.empty()) {
      PathBundle path(pl.path_sites, dt, static_cast<std::size_t>(M * Ks), 0, kernel_->potential().space);
      std::vector<double> buf(static_cast<std::size_t>(Ks) + 1);
      const TemporalEdge* prev = nullptr;
      for (const auto& b : pl.bridges) {
        lw += sampler_->sample(vertex(b.site, b.slice), vertex(b.site, b.slice + 1), static_cast<std::size_t>(Ks), dt,
                               rng, buf.data());
        double* row = path.row(path.index_of(b.site));
        const std::size_t start = static_cast<std::size_t>(b.slice * Ks);
        // Continue the lift of the previous slice on the circle.
        const double shift = (prev && prev->site == b.site && prev->slice + 1 == b.slice) ? row[start] - buf[0] : 0.0;
        for (std::size_t k = 0; k <= static_cast<std::size_t>(Ks); ++k) row[start + k] = buf[k] + shift;
        prev = &b;
      }
      path.compute_increments(kernel_->potential());
      for (const auto& e : pl.space) {
        const double a = static_cast<double>(e.slice * Ks) * dt, bnd = static_cast<double>((e.slice + 1) * Ks) * dt;
        prod *= std::expm1(-psi(drift_, e.site, a, bnd, path));
      }
    }
    const double t = T * M;
    for (const auto& e : pl.time) {
      const double z = vertex(e.site, e.slice), z1 = vertex(e.site, e.slice + 1), yi = y.at(e.site);
      const double q = kernel_->density(T, z, z1) * kernel_->density(t - (e.slice + 1) * T, z1, yi) /
                       kernel_->density(t - e.slice * T, z, yi);
      prod *= q - 1.0;
    }
    const double v = prod * std::exp(lw);
    return absolute ? std::abs(v) : v;
  }

  DriftSpec drift_;
  std::shared_ptr<const FreeKernel> kernel_;
  std::unique_ptr<BridgeSampler> sampler_;
  MCParams mc_;
  std::shared_ptr<const ClusterUniverse> universe_;
  long slice_steps_ = 1;
  std::vector<Plan> plans_;
};

// Weights of every enumerated cluster for fixed (x, y, t, beta).
struct WeightTable {
  std::shared_ptr<const ClusterUniverse> universe;
  std::vector<Estimate> weights;  // canonical cluster order
  TimeGrid grid;
  int kmax = 0;

  std::size_t size() const { return weights.size(); }
  const SpaceTimeCluster& cluster(std::size_t p) const { return universe->cluster(p); }
  bool active(std::size_t p) const { return !(weights[p].exact && weights[p].value == 0.0); }

  Estimate at(const SpaceTimeCluster& G) const {
    for (std::size_t p = 0; p < universe->size(); ++p)
      if (universe->cluster(p) == G) return weights[p];
    throw CoverageError("weight table: cluster " + G.key() + " not enumerated");
  }
};

inline WeightTable weight_table(const WeightEngine& engine, const Configuration& x, const Configuration& y,
                                std::uint64_t seed) {
  WeightTable t{engine.universe_ptr(), {}, engine.grid(), engine.universe().kmax()};
  t.weights.resize(engine.universe().size());
  for (std::size_t p = 0; p < t.weights.size(); ++p) t.weights[p] = engine.weight(p, x, y, seed);
  return t;
}

// Single-cluster convenience: builds the instance and estimates K for G.
inline Estimate cluster_weight(const SpaceTimeCluster& G, const Configuration& x, const Configuration& y,
                               const DriftSpec& drift, const PotentialSpec& pot, const Volume& vol,
                               const TimeGrid& grid, const MCParams& mc, std::uint64_t seed) {
  const WeightEngine engine(drift, pot, vol, grid, static_cast<int>(G.size()), mc);
  for (std::size_t p = 0; p < engine.universe().size(); ++p)
    if (engine.universe().cluster(p) == G) return engine.weight(p, x, y, seed);
  throw ValidationError("cluster_weight: " + G.key() + " is not a cluster of this instance");
}

namespace detail {

// Standard error of a polynomial in independent estimates from its gradient.
inline double propagate(const std::map<std::size_t, double>& grad, const std::vector<Estimate>& w) {
  double v = 0.0;
  for (const auto& [p, g] : grad) v += g * g * w[p].std_err * w[p].std_err;
  return std::sqrt(v);
}

}  // namespace detail

// 1 + sum over families of pairwise non-intersecting clusters with total size
// <= kMax of the product of their weights.
inline Estimate reconstruct_density(const WeightTable& table, std::size_t budget = 2000000) {
  const auto& U = *table.universe;
  std::vector<std::size_t> act;
  for (std::size_t p = 0; p < table.size(); ++p)
    if (table.active(p)) act.push_back(p);
  double total = 1.0;
  std::map<std::size_t, double> grad;
  std::size_t families = 0;
  std::vector<std::size_t> chosen;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t from, std::size_t used) {
    for (std::size_t a = from; a < act.size(); ++a) {
      const std::size_t p = act[a];
      if (used + U.polymer_size(p) > static_cast<std::size_t>(table.kmax)) continue;
      bool ok = true;
      for (auto q : chosen) ok = ok && !U.conflict(p, q);
      if (!ok) continue;
      chosen.push_back(p);
      if (++families > budget) throw BudgetError("reconstruct_density: family count exceeds the cap");
      double prod = 1.0;
      for (auto q : chosen) prod *= table.weights[q].value;
      total += prod;
      for (auto q : chosen) {
        double others = 1.0;
        for (auto r : chosen)
          if (r != q) others *= table.weights[r].value;
        grad[q] += others;
      }
      rec(a + 1, used + U.polymer_size(p));
      chosen.pop_back();
    }
  };
  rec(0, 0);
  bool exact = true;
  for (auto p : act) exact = exact && table.weights[p].exact;
  std::size_t n = 0;
  for (auto p : act) n = std::max(n, table.weights[p].n);
  return {total, detail::propagate(grad, table.weights), n, exact};
}

// Phi_Delta with the truncated log series; keys are the reach of each
// connected collection (the sites its weights read).
struct InteractionTable {
  std::map<Volume, Estimate> terms;
  Estimate total;  // sum over Delta of Phi_Delta, with joint error
  int nmax = 0;
  std::size_t collections = 0;

  Estimate at(const Volume& delta) const {
    auto it = terms.find(delta);
    return it == terms.end() ? Estimate::exact_value(0.0) : it->second;
  }
  // log f = -sum Phi.
  Estimate log_density() const { return {-total.value, total.std_err, total.n, total.exact}; }
};

// Connected collections (multisets) of active clusters with at most nMax members.
struct Collection {
  std::vector<std::size_t> polymers;  // distinct, ascending
  std::vector<int> multiplicity;
  Rational coefficient;
  Volume reach;
};

inline std::vector<Collection> connected_collections(const ClusterUniverse& U, const std::vector<std::size_t>& active,
                                                     int nMax, std::size_t budget = 2000000) {
  require(nMax >= 1 && nMax <= kMaxUrsellOrder, "interaction_terms: nMax must lie in [1, 8]");
  std::set<std::vector<std::size_t>> level, all;
  for (auto p : active) level.insert({p});
  all = level;
  for (int s = 2; s <= nMax; ++s) {
    std::set<std::vector<std::size_t>> next;
    for (const auto& c : level)
      for (auto p : active) {
        if (std::binary_search(c.begin(), c.end(), p)) continue;
        bool touches = false;
        for (auto q : c) touches = touches || U.conflict(p, q);
        if (!touches) continue;
        auto d = c;
        d.insert(std::lower_bound(d.begin(), d.end(), p), p);
        next.insert(std::move(d));
      }
    if (all.size() + next.size() > budget) throw BudgetError("interaction_terms: collection count exceeds the cap");
    all.insert(next.begin(), next.end());
    level = std::move(next);
  }
  std::vector<std::vector<std::size_t>> sets(all.begin(), all.end());
  std::stable_sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
  std::vector<Collection> out;
  for (const auto& s : sets) {
    Volume reach;
    for (auto p : s) reach = reach.unite(U.reach(p));
    std::vector<int> mult(s.size(), 1);
    std::function<void(std::size_t, int)> rec = [&](std::size_t k, int left) {
      if (k == s.size()) {
        std::vector<std::size_t> members;
        std::vector<int> cls;
        for (std::size_t a = 0; a < s.size(); ++a)
          for (int c = 0; c < mult[a]; ++c) {
            members.push_back(s[a]);
            cls.push_back(static_cast<int>(a));
          }
        const std::size_t n = members.size();
        std::vector<std::uint32_t> adj(n, 0);
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = a + 1; b < n; ++b)
            if (members[a] == members[b] || U.conflict(members[a], members[b])) {
              adj[a] |= 1u << b;
              adj[b] |= 1u << a;
            }
        const Rational c = ursell_from_graph(adj, cls);
        if (c.num != 0) out.push_back({s, mult, c, reach});
        if (out.size() > budget) throw BudgetError("interaction_terms: collection count exceeds the cap");
        return;
      }
      for (int m = 1; m <= left; ++m) {
        mult[k] = m;
        rec(k + 1, left - m + 1);
      }
      mult[k] = 1;
    };
    rec(0, nMax - static_cast<int>(s.size()) + 1);
  }
  return out;
}

// Phi from precomputed collections and a weight vector.
inline InteractionTable interaction_from(const std::vector<Collection>& cols, const std::vector<Estimate>& w, int nMax) {
  InteractionTable it;
  it.nmax = nMax;
  it.collections = cols.size();
  std::map<Volume, std::pair<double, std::map<std::size_t, double>>> acc;
  double total = 0.0;
  std::map<std::size_t, double> total_grad;
  bool exact = true;
  std::size_t n = 0;
  for (const auto& c : cols) {
    double prod = c.coefficient.value();
    for (std::size_t a = 0; a < c.polymers.size(); ++a) prod *= std::pow(w[c.polymers[a]].value, c.multiplicity[a]);
    auto& slot = acc[c.reach];
    slot.first -= prod;
    total -= prod;
    for (std::size_t a = 0; a < c.polymers.size(); ++a) {
      const std::size_t p = c.polymers[a];
      exact = exact && w[p].exact;
      n = std::max(n, w[p].n);
      double d = c.coefficient.value() * c.multiplicity[a] * std::pow(w[p].value, c.multiplicity[a] - 1);
      for (std::size_t b = 0; b < c.polymers.size(); ++b)
        if (b != a) d *= std::pow(w[c.polymers[b]].value, c.multiplicity[b]);
      slot.second[p] -= d;
      total_grad[p] -= d;
    }
  }
  for (const auto& [delta, s] : acc) {
    bool ex = true;
    for (const auto& [p, g] : s.second) ex = ex && w[p].exact;
    it.terms[delta] = {s.first, detail::propagate(s.second, w), n, ex};
  }
  it.total = {total, detail::propagate(total_grad, w), n, exact};
  return it;
}

// Phi_Delta = -sum over connected collections with reach Delta and at most
// nMax members of C(Gamma_1..Gamma_n) prod K; log f = -sum_Delta Phi_Delta.
inline InteractionTable interaction_terms(const WeightTable& table, int nMax, std::size_t budget = 2000000) {
  std::vector<std::size_t> act;
  for (std::size_t p = 0; p < table.size(); ++p)
    if (table.active(p)) act.push_back(p);
  return interaction_from(connected_collections(*table.universe, act, nMax, budget), table.weights, nMax);
}

struct KpResult {
  bool satisfied = true;
  double worst_ratio = 0.0;
  std::size_t worst_cluster = 0;
};

// Kotecky-Preiss with the bound |K_Gamma| <= lambda^|Gamma|:
// sum_{Gamma' conflicting Gamma} |Gamma'| (lambda e)^|Gamma'| <= |Gamma| for every Gamma.
inline KpResult kp_check(double lambda, const ClusterUniverse& U) {
  require(lambda >= 0 && std::isfinite(lambda), "kp_check: lambda must be >= 0");
  KpResult r;
  const double le = lambda * std::exp(1.0);
  for (std::size_t p = 0; p < U.size(); ++p) {
    double s = 0.0;
    if (le > 0)
      for (std::size_t q = 0; q < U.size(); ++q)
        if (U.conflict(p, q)) {
          const double k = static_cast<double>(U.polymer_size(q));
          s += k * std::pow(le, k);
        }
    const double ratio = s / static_cast<double>(U.polymer_size(p));
    if (ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.worst_cluster = p;
    }
  }
  r.satisfied = r.worst_ratio <= 1.0;
  return r;
}

inline KpResult kp_check(double lambda, const Volume& vol, const ClusterGeometry& geom, int kMax) {
  return kp_check(lambda, ClusterUniverse(vol, geom, kMax));
}

struct LambdaStar {
  double lambda = 0.0;  // largest satisfied value found
  double step = 0.0;    // final bracket width
  int iterations = 0;
};

// Bisection on [0, 1/e] (at 1/e the self term alone gives ratio 1 and any
// other conflicting cluster pushes it above).
inline LambdaStar lambda_star(const ClusterUniverse& U, double tol = 1e-6) {
  double lo = 0.0, hi = std::exp(-1.0);
  LambdaStar r;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (kp_check(mid, U).satisfied ? lo : hi) = mid;
    ++r.iterations;
  }
  r.lambda = lo;
  r.step = hi - lo;
  return r;
}

// Time grid for intensity beta: T = max(t0, 1/beta), M = round(t / T) >= 1 with
// T recomputed as t / M, kept >= t0 and a whole number of dt steps.
inline TimeGrid grid_for_beta(double beta, double t0, double horizon, double dt) {
  require(horizon > 0, "grid: horizon must be positive");
  require(t0 <= horizon, "grid: drift memory exceeds the horizon");
  const double T0 = beta > 0 ? std::max(t0, 1.0 / beta) : horizon;
  const int M0 = std::max(1, static_cast<int>(std::lround(horizon / T0)));
  const long total = steps_for(horizon, dt, "horizon");
  for (int d = 0; d <= M0; ++d)
    for (int M : {M0 - d, M0 + d}) {
      if (M < 1 || total % M != 0) continue;
      const double T = horizon / M;
      if (T + 1e-12 < t0) continue;
      return {T, M};
    }
  return {horizon, 1};
}

struct WeightFitInstance {
  DriftSpec drift;  // beta is overridden per grid point
  PotentialSpec pot;
  Volume vol;
  Configuration x, y;
  double horizon = 10.0;
  int kmax = 2;
  ProbeBox box;
};

struct WeightFitRow {
  double beta = 0.0;
  TimeGrid grid;
  double lambda_hat = 0.0;
  double lambda_lo = 0.0;  // from |K| - 2 stderr
  double lambda_hi = 0.0;  // from |K| + 2 stderr
  double c1 = 0.0, c1_err = 0.0;
  double c2 = 0.0;
  std::size_t clusters = 0;
  std::string worst_cluster;
};

// lambda-hat(beta) = max over clusters of |K|^(1/|Gamma|), with the space factor
// C1 = max over single space edges of E|exp(-Psi) - 1| and the time factor
// C2 = sup |p_T - 1| on the probe box. Seeds are shared across the beta grid.
inline std::vector<WeightFitRow> weight_bound_fit(const std::vector<double>& betas, const WeightFitInstance& inst,
                                                  const MCParams& mc, std::uint64_t seed) {
  require(!betas.empty(), "weight_bound_fit: empty beta grid");
  const auto kernel = std::make_shared<const FreeKernel>(inst.pot);
  std::vector<WeightFitRow> rows;
  for (double beta : betas) {
    require(beta >= 0, "weight_bound_fit: beta must be >= 0");
    WeightFitRow row;
    row.beta = beta;
    row.grid = grid_for_beta(beta, inst.drift.memory, inst.horizon, mc.dt);
    const WeightEngine engine(inst.drift.with_beta(beta), kernel, inst.vol, row.grid, inst.kmax, mc);
    const auto& U = engine.universe();
    row.clusters = U.size();
    for (std::size_t p = 0; p < U.size(); ++p) {
      const Estimate w = engine.weight(p, inst.x, inst.y, seed);
      const double inv = 1.0 / static_cast<double>(U.polymer_size(p));
      const double lam = std::pow(std::abs(w.value), inv);
      if (lam > row.lambda_hat) {
        row.lambda_hat = lam;
        row.worst_cluster = U.cluster(p).key();
      }
      row.lambda_lo = std::max(row.lambda_lo, std::pow(std::max(std::abs(w.value) - 2 * w.std_err, 0.0), inv));
      row.lambda_hi = std::max(row.lambda_hi, std::pow(std::abs(w.value) + 2 * w.std_err, inv));
      if (U.polymer_size(p) == 1 && !U.pure_time(p)) {
        const Estimate a = engine.absolute_weight(p, inst.x, inst.y, seed);
        if (a.value >= row.c1) {
          row.c1 = a.value;
          row.c1_err = a.std_err;
        }
      }
    }
    row.c2 = kernel_sup_distance(*kernel, row.grid.T, inst.box).value;
    rows.push_back(row);
  }
  return rows;
}

struct SummabilityReport {
  std::map<Site, double> per_site;  // sum over Delta containing i of (|Delta| - 1) max |Phi_Delta|
  double sup = 0.0;
  Site worst_site;
};

// sup_i sum_{Delta contains i} (|Delta| - 1) ||Phi_Delta||, the norm taken as a
// maximum over the probe tables (a lower bound for the true sup norm).
inline SummabilityReport summability_report(const std::vector<InteractionTable>& probes) {
  std::map<Volume, double> norm;
  for (const auto& t : probes)
    for (const auto& [delta, e] : t.terms) norm[delta] = std::max(norm[delta], std::abs(e.value));
  SummabilityReport r;
  for (const auto& [delta, v] : norm)
    for (const auto& i : delta) r.per_site[i] += (static_cast<double>(delta.size()) - 1.0) * v;
  bool first = true;
  for (const auto& [i, s] : r.per_site)
    if (first || s > r.sup) {
      r.sup = s;
      r.worst_site = i;
      first = false;
    }
  return r;
}

// Probe pairs (x, y): draws from m on each site plus the constant
// configurations at the 5% and 95% quantiles of m.
inline std::vector<std::pair<Configuration, Configuration>> probe_pairs(const PotentialSpec& pot, const Volume& vol,
                                                                        std::size_t random, std::uint64_t seed) {
  const ReferenceMeasure m(pot);
  std::vector<std::pair<Configuration, Configuration>> out;
  for (double q : {0.05, 0.95}) {
    const auto c = Configuration::constant(vol, m.quantile(q), pot.space);
    out.push_back({c, c});
  }
  Rng rng(seed, "probe_pairs");
  for (std::size_t r = 0; r < random; ++r) {
    auto x = Configuration::constant(vol, 0.0, pot.space), y = x;
    for (const auto& s : vol) {
      x.set(s, m.sample(rng));
      y.set(s, m.sample(rng));
    }
    out.push_back({x, y});
  }
  return out;
}

}  // namespace gibbsprop
