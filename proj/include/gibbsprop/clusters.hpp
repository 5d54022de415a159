#pragma once

#include <algorithm>
#include <bitset>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"
#include "gibbsprop/lattice.hpp"

namespace gibbsprop {

// Slices I_j = [jT, (j+1)T], j = 0..M-1, of the horizon t = M T.
struct TimeGrid {
  double T = 1.0;
  int M = 1;
  double horizon() const { return T * M; }
  bool operator==(const TimeGrid&) const = default;
};

// Everything the cluster combinatorics depends on.
struct ClusterGeometry {
  Neighborhood nbhd;
  TimeGrid grid;
  double memory = 0.0;  // drift memory t0; requires T >= t0

  void validate() const {
    require(grid.M >= 1, "time grid needs M >= 1");
    require(grid.T > 0 && std::isfinite(grid.T), "time grid needs T > 0");
    require(grid.T + 1e-12 >= memory, "time grid step T must be at least the drift memory t0");
  }
};

// A unit space-time pair (site i, slice j).
struct TemporalEdge {
  Site site;
  int slice = 0;
  auto operator<=>(const TemporalEdge&) const = default;
  bool operator==(const TemporalEdge&) const = default;
};

// A time-grid vertex (i, jT).
struct Vertex {
  Site site;
  int level = 0;
  auto operator<=>(const Vertex&) const = default;
  bool operator==(const Vertex&) const = default;
};

// Same-slice temporal edges at distinct sites whose neighbourhoods chain together.
struct SpaceCluster {
  int slice = 0;
  std::vector<Site> sites;  // sorted, unique

  std::size_t size() const { return sites.size(); }
  auto operator<=>(const SpaceCluster&) const = default;
  bool operator==(const SpaceCluster&) const = default;
};

// Temporal edges at one site over consecutive slices first..last.
struct TimeCluster {
  Site site;
  int first = 0;
  int last = 0;

  std::size_t size() const { return static_cast<std::size_t>(last - first + 1); }
  auto operator<=>(const TimeCluster&) const = default;
  bool operator==(const TimeCluster&) const = default;
};

class SpaceTimeCluster {
 public:
  SpaceTimeCluster() = default;
  SpaceTimeCluster(std::vector<SpaceCluster> space, std::vector<TimeCluster> time)
      : space_(std::move(space)), time_(std::move(time)) {
    for (auto& s : space_) {
      require(!s.sites.empty(), "space cluster must be nonempty");
      std::sort(s.sites.begin(), s.sites.end());
      require(std::adjacent_find(s.sites.begin(), s.sites.end()) == s.sites.end(),
              "space cluster sites must be distinct");
    }
    for (const auto& c : time_) require(c.first <= c.last && c.first >= 0, "time cluster slices must be a range");
    std::sort(space_.begin(), space_.end());
    std::sort(time_.begin(), time_.end());
    require(!space_.empty() || !time_.empty(), "space-time cluster must be nonempty");
  }

  // Groups edges into space clusters (chain components per slice) and time
  // clusters (maximal consecutive runs per site).
  static SpaceTimeCluster from_edges(std::vector<TemporalEdge> space_edges, std::vector<TemporalEdge> time_edges,
                                     const Neighborhood& nbhd) {
    std::sort(space_edges.begin(), space_edges.end(),
              [](const TemporalEdge& a, const TemporalEdge& b) { return std::tie(a.slice, a.site) < std::tie(b.slice, b.site); });
    std::vector<SpaceCluster> sc;
    std::size_t k = 0;
    while (k < space_edges.size()) {
      const int j = space_edges[k].slice;
      std::vector<Site> sites;
      while (k < space_edges.size() && space_edges[k].slice == j) sites.push_back(space_edges[k++].site);
      std::vector<int> comp(sites.size(), -1);
      int nc = 0;
      for (std::size_t a = 0; a < sites.size(); ++a) {
        if (comp[a] >= 0) continue;
        std::vector<std::size_t> stack{a};
        comp[a] = nc;
        while (!stack.empty()) {
          const auto u = stack.back();
          stack.pop_back();
          for (std::size_t b = 0; b < sites.size(); ++b)
            if (comp[b] < 0 && nbhd.overlaps(sites[u], sites[b])) {
              comp[b] = nc;
              stack.push_back(b);
            }
        }
        ++nc;
      }
      for (int c = 0; c < nc; ++c) {
        SpaceCluster s{j, {}};
        for (std::size_t a = 0; a < sites.size(); ++a)
          if (comp[a] == c) s.sites.push_back(sites[a]);
        sc.push_back(std::move(s));
      }
    }
    std::sort(time_edges.begin(), time_edges.end());
    std::vector<TimeCluster> tc;
    for (const auto& e : time_edges) {
      if (!tc.empty() && tc.back().site == e.site && tc.back().last + 1 == e.slice) tc.back().last = e.slice;
      else if (!tc.empty() && tc.back().site == e.site && tc.back().last >= e.slice)
        throw ValidationError("duplicate time edge");
      else tc.push_back({e.site, e.slice, e.slice});
    }
    return SpaceTimeCluster(std::move(sc), std::move(tc));
  }

  const std::vector<SpaceCluster>& space_clusters() const { return space_; }
  const std::vector<TimeCluster>& time_clusters() const { return time_; }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& s : space_) n += s.size();
    for (const auto& c : time_) n += c.size();
    return n;
  }

  std::vector<TemporalEdge> space_edges() const {
    std::vector<TemporalEdge> e;
    for (const auto& s : space_)
      for (const auto& i : s.sites) e.push_back({i, s.slice});
    std::sort(e.begin(), e.end());
    return e;
  }
  std::vector<TemporalEdge> time_edges() const {
    std::vector<TemporalEdge> e;
    for (const auto& c : time_)
      for (int j = c.first; j <= c.last; ++j) e.push_back({c.site, j});
    std::sort(e.begin(), e.end());
    return e;
  }

  // [Gamma]: the vertices (i, jT), (i, (j+1)T) of all edges.
  std::vector<Vertex> support() const {
    std::vector<Vertex> v;
    for (const auto& e : space_edges()) {
      v.push_back({e.site, e.slice});
      v.push_back({e.site, e.slice + 1});
    }
    for (const auto& e : time_edges()) {
      v.push_back({e.site, e.slice});
      v.push_back({e.site, e.slice + 1});
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  // Canonical text key, stable across runs and platforms.
  std::string key() const {
    std::string k;
    for (const auto& s : space_) {
      k += "S" + std::to_string(s.slice) + ":";
      for (std::size_t a = 0; a < s.sites.size(); ++a) k += (a ? "," : "") + s.sites[a].str();
      k += ";";
    }
    for (const auto& c : time_) k += "T" + c.site.str() + ":" + std::to_string(c.first) + "-" + std::to_string(c.last) + ";";
    return k;
  }

  auto operator<=>(const SpaceTimeCluster&) const = default;
  bool operator==(const SpaceTimeCluster&) const = default;

 private:
  std::vector<SpaceCluster> space_;
  std::vector<TimeCluster> time_;
};

// True iff no edge of g1 is space-connected with an edge of g2.
inline bool space_compatible(const SpaceCluster& g1, const SpaceCluster& g2, const Neighborhood& nbhd) {
  for (const auto& a : g1.sites)
    for (const auto& b : g2.sites)
      if (nbhd.overlaps(a, b)) return false;
  return true;
}

// Chain-connectivity of a site set under neighbourhood overlap.
inline bool chain_connected(const std::vector<Site>& sites, const Neighborhood& nbhd) {
  if (sites.empty()) return false;
  std::vector<bool> seen(sites.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (std::size_t b = 0; b < sites.size(); ++b)
      if (!seen[b] && nbhd.overlaps(sites[u], sites[b])) {
        seen[b] = true;
        ++count;
        stack.push_back(b);
      }
  }
  return count == sites.size();
}

namespace detail {

// Random inputs an edge factor reads: bridge pieces (i, slice) and free
// vertices (i, level) with 0 < level < M.
struct Variable {
  int kind;  // 0 bridge, 1 vertex
  Site site;
  int index;
  auto operator<=>(const Variable&) const = default;
  bool operator==(const Variable&) const = default;
};

inline std::vector<Variable> space_edge_footprint(const TemporalEdge& e, const ClusterGeometry& g) {
  std::vector<Variable> v;
  const int M = g.grid.M;
  for (const auto& o : g.nbhd.offsets()) {
    const Site i = e.site + o;
    auto add_bridge = [&](int j) {
      v.push_back({0, i, j});
      if (j >= 1) v.push_back({1, i, j});
      if (j + 1 <= M - 1) v.push_back({1, i, j + 1});
    };
    add_bridge(e.slice);
    if (g.memory > 0 && e.slice >= 1) add_bridge(e.slice - 1);
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline std::vector<Variable> time_edge_footprint(const TemporalEdge& e, const ClusterGeometry& g) {
  std::vector<Variable> v;
  if (e.slice >= 1) v.push_back({1, e.site, e.slice});
  if (e.slice + 1 <= g.grid.M - 1) v.push_back({1, e.site, e.slice + 1});
  return v;
}

template <class T>
bool sorted_intersect(const std::vector<T>& a, const std::vector<T>& b) {
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i;
    else ++j;
  }
  return false;
}

struct EdgeInfo {
  bool space;
  TemporalEdge e;
  std::vector<Variable> footprint;
  std::vector<Vertex> support;
};

inline EdgeInfo edge_info(bool space, const TemporalEdge& e, const ClusterGeometry& g) {
  EdgeInfo r{space, e, space ? space_edge_footprint(e, g) : time_edge_footprint(e, g), {}};
  r.support = {{e.site, e.slice}, {e.site, e.slice + 1}};
  return r;
}

// Two edges are linked when their factors share random inputs, their vertex
// supports meet, they are the same edge, or they are same-slice space edges
// with overlapping neighbourhoods.
inline bool linked(const EdgeInfo& a, const EdgeInfo& b, const ClusterGeometry& g) {
  if (a.space == b.space && a.e == b.e) return true;
  if (a.space && b.space && a.e.slice == b.e.slice && g.nbhd.overlaps(a.e.site, b.e.site)) return true;
  if (sorted_intersect(a.support, b.support)) return true;
  return sorted_intersect(a.footprint, b.footprint);
}

inline std::vector<EdgeInfo> edge_infos(const SpaceTimeCluster& G, const ClusterGeometry& g) {
  std::vector<EdgeInfo> out;
  for (const auto& e : G.space_edges()) out.push_back(edge_info(true, e, g));
  for (const auto& e : G.time_edges()) out.push_back(edge_info(false, e, g));
  return out;
}

}  // namespace detail

// Same-slice space clusters compatible, time clusters disjoint, supports
// disjoint, and no shared random input between the two weight factors.
inline bool non_intersecting(const SpaceTimeCluster& G1, const SpaceTimeCluster& G2, const ClusterGeometry& g) {
  for (const auto& a : G1.space_clusters())
    for (const auto& b : G2.space_clusters())
      if (a.slice == b.slice && !space_compatible(a, b, g.nbhd)) return false;
  const auto t1 = G1.time_edges(), t2 = G2.time_edges();
  if (detail::sorted_intersect(t1, t2)) return false;
  if (detail::sorted_intersect(G1.support(), G2.support())) return false;
  const auto e1 = detail::edge_infos(G1, g), e2 = detail::edge_infos(G2, g);
  for (const auto& a : e1)
    for (const auto& b : e2)
      if (detail::sorted_intersect(a.footprint, b.footprint)) return false;
  return true;
}

inline bool conflicts(const SpaceTimeCluster& G1, const SpaceTimeCluster& G2, const ClusterGeometry& g) {
  return !non_intersecting(G1, G2, g);
}

// Connectivity of the conflict graph on a collection.
inline bool is_connected(const std::vector<SpaceTimeCluster>& Gs, const ClusterGeometry& g) {
  require(!Gs.empty(), "is_connected: empty collection");
  std::vector<bool> seen(Gs.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (std::size_t b = 0; b < Gs.size(); ++b)
      if (!seen[b] && conflicts(Gs[u], Gs[b], g)) {
        seen[b] = true;
        ++count;
        stack.push_back(b);
      }
  }
  return count == Gs.size();
}

// Projection of the support on the lattice.
inline Volume trace(const SpaceTimeCluster& G) {
  std::vector<Site> s;
  for (const auto& v : G.support()) s.push_back(v.site);
  return Volume(std::move(s));
}

inline Volume trace(const std::vector<SpaceTimeCluster>& Gs) {
  Volume v;
  for (const auto& G : Gs) v = v.unite(trace(G));
  return v;
}

// Sites whose values the weight of G can depend on: the trace plus the
// neighbourhoods read by its space edges.
inline Volume reach(const SpaceTimeCluster& G, const ClusterGeometry& g) {
  std::vector<Site> s;
  for (const auto& e : G.space_edges())
    for (const auto& o : g.nbhd.offsets()) s.push_back(e.site + o);
  for (const auto& e : G.time_edges()) s.push_back(e.site);
  return Volume(std::move(s));
}

// All chain-connected site subsets of size <= kMax at one slice.
inline std::vector<SpaceCluster> enumerate_space_clusters(const Volume& sites, const Neighborhood& nbhd, int slice,
                                                          int kMax) {
  require(kMax >= 1, "enumerate: kMax must be >= 1");
  std::set<std::vector<Site>> level, all;
  for (const auto& s : sites) level.insert({s});
  all.insert(level.begin(), level.end());
  for (int size = 2; size <= kMax; ++size) {
    std::set<std::vector<Site>> next;
    for (const auto& c : level)
      for (const auto& s : sites) {
        if (std::binary_search(c.begin(), c.end(), s)) continue;
        bool touches = false;
        for (const auto& u : c) touches = touches || nbhd.overlaps(u, s);
        if (!touches) continue;
        auto d = c;
        d.insert(std::lower_bound(d.begin(), d.end(), s), s);
        next.insert(std::move(d));
      }
    all.insert(next.begin(), next.end());
    level = std::move(next);
  }
  std::vector<SpaceCluster> out;
  for (const auto& c : all) out.push_back({slice, c});
  std::stable_sort(out.begin(), out.end(), [](const SpaceCluster& a, const SpaceCluster& b) { return a.size() < b.size(); });
  return out;
}

inline constexpr std::size_t kMaxEdges = 512;
using EdgeMask = std::bitset<kMaxEdges>;

// The temporal edges of a finite-volume instance with their linkage graph and
// the connected edge sets (polymers) up to a size cap, in canonical order.
class ClusterUniverse {
 public:
  ClusterUniverse(const Volume& vol, const ClusterGeometry& geom, int kMax, std::size_t budget = 200000)
      : vol_(vol), geom_(geom), kMax_(kMax) {
    geom.validate();
    require(kMax >= 1, "enumerate: kMax must be >= 1");
    const Volume inner = interior(vol, geom.nbhd);
    for (int j = 0; j < geom.grid.M; ++j)
      for (const auto& k : inner) edges_.push_back(detail::edge_info(true, {k, j}, geom));
    for (int j = 0; j + 1 < geom.grid.M; ++j)
      for (const auto& i : vol) edges_.push_back(detail::edge_info(false, {i, j}, geom));
    if (edges_.size() > kMaxEdges)
      throw BudgetError("enumerate: " + std::to_string(edges_.size()) + " temporal edges exceed the cap " +
                        std::to_string(kMaxEdges));
    const std::size_t n = edges_.size();
    adj_.assign(n, EdgeMask{});
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (detail::linked(edges_[a], edges_[b], geom)) {
          adj_[a].set(b);
          adj_[b].set(a);
        }
    enumerate(budget);
  }

  const Volume& volume() const { return vol_; }
  const ClusterGeometry& geometry() const { return geom_; }
  int kmax() const { return kMax_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool is_space_edge(std::size_t e) const { return edges_[e].space; }
  const TemporalEdge& edge(std::size_t e) const { return edges_[e].e; }

  std::size_t size() const { return polymers_.size(); }
  const std::vector<std::size_t>& polymer_edges(std::size_t p) const { return members_[p]; }
  const EdgeMask& mask(std::size_t p) const { return masks_[p]; }
  const SpaceTimeCluster& cluster(std::size_t p) const { return polymers_[p]; }
  const std::vector<SpaceTimeCluster>& clusters() const { return polymers_; }
  std::size_t polymer_size(std::size_t p) const { return members_[p].size(); }

  // Polymers conflict when any of their edges are linked.
  bool conflict(std::size_t p, std::size_t q) const { return (closure_[p] & masks_[q]).any(); }

  // A pure time polymer (no space edge).
  bool pure_time(std::size_t p) const {
    for (auto e : members_[p])
      if (edges_[e].space) return false;
    return true;
  }

  Volume reach(std::size_t p) const { return gibbsprop::reach(polymers_[p], geom_); }

 private:
  void enumerate(std::size_t budget) {
    const std::size_t n = edges_.size();
    std::set<std::vector<std::size_t>> level, all;
    for (std::size_t e = 0; e < n; ++e) level.insert({e});
    all = level;
    for (int size = 2; size <= kMax_; ++size) {
      std::set<std::vector<std::size_t>> next;
      for (const auto& c : level) {
        EdgeMask nb, in;
        for (auto e : c) {
          nb |= adj_[e];
          in.set(e);
        }
        nb &= ~in;
        for (std::size_t e = nb._Find_first(); e < n; e = nb._Find_next(e)) {
          auto d = c;
          d.insert(std::lower_bound(d.begin(), d.end(), e), e);
          next.insert(std::move(d));
        }
        if (all.size() + next.size() > budget)
          throw BudgetError("enumerate: cluster count exceeds the cap " + std::to_string(budget));
      }
      all.insert(next.begin(), next.end());
      level = std::move(next);
    }
    std::vector<std::vector<std::size_t>> sorted(all.begin(), all.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    for (auto& c : sorted) {
      EdgeMask m, cl;
      std::vector<TemporalEdge> se, te;
      for (auto e : c) {
        m.set(e);
        cl |= adj_[e];
        (edges_[e].space ? se : te).push_back(edges_[e].e);
      }
      cl |= m;
      masks_.push_back(m);
      closure_.push_back(cl);
      polymers_.push_back(SpaceTimeCluster::from_edges(se, te, geom_.nbhd));
      members_.push_back(std::move(c));
    }
  }

  Volume vol_;
  ClusterGeometry geom_;
  int kMax_;
  std::vector<detail::EdgeInfo> edges_;
  std::vector<EdgeMask> adj_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<EdgeMask> masks_, closure_;
  std::vector<SpaceTimeCluster> polymers_;
};

// Space clusters rooted in the interior of vol on every slice, time clusters
// at every site of vol on slices 0..M-2, connected under edge linkage, with at
// most kMax temporal edges; canonical order (size, then edge order).
inline std::vector<SpaceTimeCluster> enumerate_clusters(const Volume& vol, const ClusterGeometry& geom, int kMax,
                                                        std::size_t budget = 200000) {
  if (vol.empty()) return {};
  return ClusterUniverse(vol, geom, kMax, budget).clusters();
}

}  // namespace gibbsprop
