#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "gibbsprop/clusters.hpp"
#include "gibbsprop/error.hpp"

namespace gibbsprop {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    require(d != 0, "rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }
  bool operator==(const Rational&) const = default;
};

inline constexpr int kMaxUrsellOrder = 8;

// Sum over connected spanning subgraphs of (-1)^{#edges} for a graph on n <= 8
// vertices given as adjacency bitmasks. Subset recursion on the block of the
// lowest vertex: C(S) = Z(S) - sum_{min S in T, T != S} C(T) Z(S\T), where
// Z(S) = sum over all spanning subgraphs of S = 0^{#edges inside S}.
inline std::int64_t connected_signed_count(const std::vector<std::uint32_t>& adj) {
  const int n = static_cast<int>(adj.size());
  require(n >= 1 && n <= kMaxUrsellOrder, "Ursell order out of range");
  static std::mutex mu;
  static std::map<std::vector<std::uint32_t>, std::int64_t> memo;
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = memo.find(adj); it != memo.end()) return it->second;
  }
  const std::uint32_t full = (1u << n) - 1;
  std::vector<std::int64_t> Z(full + 1), C(full + 1, 0);
  for (std::uint32_t S = 0; S <= full; ++S) {
    bool edge = false;
    for (int v = 0; v < n && !edge; ++v)
      if ((S >> v) & 1u) edge = (adj[v] & S & ~(1u << v)) != 0;
    Z[S] = edge ? 0 : 1;
  }
  for (std::uint32_t S = 1; S <= full; ++S) {
    const std::uint32_t low = S & (~S + 1);
    std::int64_t c = Z[S];
    const std::uint32_t rest = S & ~low;
    for (std::uint32_t sub = rest; sub; sub = (sub - 1) & rest) {
      const std::uint32_t T = sub | low;
      if (T != S) c -= C[T] * Z[S & ~T];
    }
    if (rest) c -= C[low] * Z[rest];
    C[S] = c;
  }
  std::lock_guard<std::mutex> lock(mu);
  memo.emplace(adj, C[full]);
  return C[full];
}

inline std::int64_t factorial(int n) {
  std::int64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Coefficient of prod K(G_i) in log of the polymer partition function, for a
// multiset described by its conflict graph (self-loops implicit) and the
// multiplicity of each vertex's polymer class.
inline Rational ursell_from_graph(const std::vector<std::uint32_t>& adj, const std::vector<int>& class_of) {
  std::map<int, int> mult;
  for (int c : class_of) ++mult[c];
  std::int64_t den = 1;
  for (const auto& [c, m] : mult) den *= factorial(m);
  return Rational(connected_signed_count(adj), den);
}

// Ursell coefficient of a multiset of clusters on the conflict graph; equal
// clusters always conflict.
inline Rational ursell_coefficient(const std::vector<SpaceTimeCluster>& Gs, const ClusterGeometry& g) {
  require(!Gs.empty(), "ursell_coefficient: empty collection");
  const int n = static_cast<int>(Gs.size());
  require(n <= kMaxUrsellOrder, "ursell_coefficient: collection larger than " + std::to_string(kMaxUrsellOrder));
  std::vector<std::uint32_t> adj(n, 0);
  std::vector<int> cls(n);
  for (int a = 0; a < n; ++a) {
    cls[a] = a;
    for (int b = 0; b < a; ++b)
      if (Gs[a] == Gs[b]) {
        cls[a] = cls[b];
        break;
      }
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (cls[a] == cls[b] || conflicts(Gs[a], Gs[b], g)) {
        adj[a] |= 1u << b;
        adj[b] |= 1u << a;
      }
  return ursell_from_graph(adj, cls);
}

}  // namespace gibbsprop
