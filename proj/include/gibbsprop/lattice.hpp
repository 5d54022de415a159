#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gibbsprop/error.hpp"

namespace gibbsprop {

inline constexpr int kMaxDim = 4;

// A point of Z^d, 1 <= d <= kMaxDim. Unused coordinates stay zero so that the
// defaulted comparison is a valid lexicographic order.
struct Site {
  std::array<int, kMaxDim> c{};
  int dim = 1;

  Site() = default;
  Site(std::initializer_list<int> coords) {
    require(coords.size() >= 1 && coords.size() <= kMaxDim, "Site: dimension must be in 1..4");
    dim = static_cast<int>(coords.size());
    std::copy(coords.begin(), coords.end(), c.begin());
  }
  explicit Site(std::span<const int> coords) {
    require(coords.size() >= 1 && coords.size() <= kMaxDim, "Site: dimension must be in 1..4");
    dim = static_cast<int>(coords.size());
    std::copy(coords.begin(), coords.end(), c.begin());
  }
  static Site zero(int d) {
    Site s;
    require(d >= 1 && d <= kMaxDim, "Site: dimension must be in 1..4");
    s.dim = d;
    return s;
  }
  static Site line(int x) { return Site{x}; }

  int operator[](int k) const { return c[static_cast<std::size_t>(k)]; }
  bool is_zero() const { return std::all_of(c.begin(), c.end(), [](int v) { return v == 0; }); }

  Site operator+(const Site& o) const {
    check_dim(o);
    Site r = *this;
    for (int k = 0; k < dim; ++k) r.c[k] += o.c[k];
    return r;
  }
  Site operator-(const Site& o) const {
    check_dim(o);
    Site r = *this;
    for (int k = 0; k < dim; ++k) r.c[k] -= o.c[k];
    return r;
  }
  Site operator-() const {
    Site r = *this;
    for (int k = 0; k < dim; ++k) r.c[k] = -r.c[k];
    return r;
  }

  auto operator<=>(const Site&) const = default;
  bool operator==(const Site&) const = default;

  std::string str() const {
    std::string s = "(";
    for (int k = 0; k < dim; ++k) {
      if (k) s += ",";
      s += std::to_string(c[k]);
    }
    return s + ")";
  }
  std::vector<int> coords() const { return {c.begin(), c.begin() + dim}; }

 private:
  void check_dim(const Site& o) const {
    if (o.dim != dim) throw ValidationError("Site: dimension mismatch " + str() + " vs " + o.str());
  }
};

// Finite set of sites, stored sorted and unique.
class Volume {
 public:
  Volume() = default;
  explicit Volume(std::vector<Site> sites) : sites_(std::move(sites)) { normalize(); }
  Volume(std::initializer_list<Site> sites) : sites_(sites) { normalize(); }

  static Volume box(const Site& lo, const Site& hi) {
    require(lo.dim == hi.dim, "Volume::box: corner dimensions differ");
    std::vector<Site> out;
    Site cur = lo;
    for (int k = 0; k < lo.dim; ++k)
      if (hi[k] < lo[k]) return Volume{};
    while (true) {
      out.push_back(cur);
      int k = lo.dim - 1;
      while (k >= 0) {
        if (++cur.c[k] <= hi[k]) break;
        cur.c[k] = lo[k];
        --k;
      }
      if (k < 0) break;
    }
    return Volume(std::move(out));
  }
  // {lo, ..., hi} in one dimension.
  static Volume interval(int lo, int hi) { return box(Site{lo}, Site{hi}); }

  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  int dim() const { return sites_.empty() ? 0 : sites_.front().dim; }
  const Site& operator[](std::size_t k) const { return sites_[k]; }
  auto begin() const { return sites_.begin(); }
  auto end() const { return sites_.end(); }
  const std::vector<Site>& sites() const { return sites_; }

  bool contains(const Site& s) const { return std::binary_search(sites_.begin(), sites_.end(), s); }
  std::optional<std::size_t> index_of(const Site& s) const {
    auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
    if (it == sites_.end() || !(*it == s)) return std::nullopt;
    return static_cast<std::size_t>(it - sites_.begin());
  }
  bool subset_of(const Volume& o) const {
    return std::includes(o.sites_.begin(), o.sites_.end(), sites_.begin(), sites_.end());
  }
  bool intersects(const Volume& o) const {
    auto a = sites_.begin(), b = o.sites_.begin();
    while (a != sites_.end() && b != o.sites_.end()) {
      if (*a == *b) return true;
      if (*a < *b) ++a;
      else ++b;
    }
    return false;
  }

  Volume unite(const Volume& o) const {
    std::vector<Site> r;
    std::set_union(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(), std::back_inserter(r));
    return from_sorted(std::move(r));
  }
  Volume intersect(const Volume& o) const {
    std::vector<Site> r;
    std::set_intersection(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(),
                          std::back_inserter(r));
    return from_sorted(std::move(r));
  }
  Volume minus(const Volume& o) const {
    std::vector<Site> r;
    std::set_difference(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(),
                        std::back_inserter(r));
    return from_sorted(std::move(r));
  }
  Volume translate(const Site& shift) const {
    std::vector<Site> r;
    r.reserve(sites_.size());
    for (const auto& s : sites_) r.push_back(s + shift);
    return Volume(std::move(r));
  }

  auto operator<=>(const Volume&) const = default;
  bool operator==(const Volume&) const = default;

  std::string str() const {
    std::string s = "{";
    for (std::size_t k = 0; k < sites_.size(); ++k) {
      if (k) s += " ";
      s += sites_[k].dim == 1 ? std::to_string(sites_[k][0]) : sites_[k].str();
    }
    return s + "}";
  }

 private:
  static Volume from_sorted(std::vector<Site> s) {
    Volume v;
    v.sites_ = std::move(s);
    return v;
  }
  void normalize() {
    std::sort(sites_.begin(), sites_.end());
    sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
    for (const auto& s : sites_)
      if (s.dim != sites_.front().dim) throw ValidationError("Volume: mixed site dimensions");
  }

  std::vector<Site> sites_;
};

// Relative offsets N of a drift or interaction. Always contains the origin.
class Neighborhood {
 public:
  Neighborhood() : Neighborhood(Volume{Site{0}}) {}
  explicit Neighborhood(Volume offsets) : offsets_(std::move(offsets)) {
    require(!offsets_.empty(), "Neighborhood: empty offset set");
    require(offsets_.contains(Site::zero(offsets_.dim())), "Neighborhood: must contain the zero offset");
    std::vector<Site> diff;
    for (const auto& a : offsets_)
      for (const auto& b : offsets_) diff.push_back(a - b);
    differences_ = Volume(std::move(diff));
  }

  static Neighborhood single(int d = 1) { return Neighborhood(Volume{Site::zero(d)}); }
  // Origin plus the 2d nearest neighbours.
  static Neighborhood nearest(int d = 1) {
    std::vector<Site> s{Site::zero(d)};
    for (int k = 0; k < d; ++k) {
      Site e = Site::zero(d);
      e.c[k] = 1;
      s.push_back(e);
      s.push_back(-e);
    }
    return Neighborhood(Volume(std::move(s)));
  }
  // All offsets with max-norm <= r.
  static Neighborhood cube(int r, int d = 1) {
    Site lo = Site::zero(d), hi = Site::zero(d);
    for (int k = 0; k < d; ++k) {
      lo.c[k] = -r;
      hi.c[k] = r;
    }
    return Neighborhood(Volume::box(lo, hi));
  }

  const Volume& offsets() const { return offsets_; }
  std::size_t size() const { return offsets_.size(); }
  int dim() const { return offsets_.dim(); }

  Volume around(const Site& i) const { return offsets_.translate(i); }

  // (a + N) and (b + N) share a site, i.e. a - b lies in N - N.
  bool overlaps(const Site& a, const Site& b) const { return differences_.contains(a - b); }
  const Volume& differences() const { return differences_; }

  bool operator==(const Neighborhood& o) const { return offsets_ == o.offsets_; }

 private:
  Volume offsets_;
  Volume differences_;
};

// {i in vol : i + N contained in vol}.
inline Volume interior(const Volume& vol, const Neighborhood& nbhd) {
  std::vector<Site> out;
  for (const auto& i : vol) {
    bool inside = true;
    for (const auto& o : nbhd.offsets())
      if (!vol.contains(i + o)) {
        inside = false;
        break;
      }
    if (inside) out.push_back(i);
  }
  return Volume(std::move(out));
}

// Union of i + N over i in vol.
inline Volume inflate(const Volume& vol, const Neighborhood& nbhd) {
  std::vector<Site> out;
  for (const auto& i : vol)
    for (const auto& o : nbhd.offsets()) out.push_back(i + o);
  return Volume(std::move(out));
}

enum class StateSpace { line, circle };

inline std::string to_string(StateSpace s) { return s == StateSpace::line ? "line" : "circle"; }

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Canonical representative in [0, 2pi).
inline double wrap_circle(double v) {
  double r = std::fmod(v, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// Signed shortest difference b - a on the circle, in [-pi, pi).
inline double circle_diff(double a, double b) {
  double d = std::fmod(b - a + std::numbers::pi, kTwoPi);
  if (d < 0) d += kTwoPi;
  return d - std::numbers::pi;
}

// Values over a finite domain; circle values are stored in [0, 2pi).
class Configuration {
 public:
  Configuration() = default;
  Configuration(Volume domain, std::vector<double> values, StateSpace space = StateSpace::line)
      : domain_(std::move(domain)), values_(std::move(values)), space_(space) {
    require(values_.size() == domain_.size(), "Configuration: value count does not match domain size");
    for (double& v : values_) {
      if (!std::isfinite(v)) throw ValidationError("Configuration: non-finite value");
      if (space_ == StateSpace::circle) v = wrap_circle(v);
    }
  }
  static Configuration constant(const Volume& domain, double v, StateSpace space = StateSpace::line) {
    return Configuration(domain, std::vector<double>(domain.size(), v), space);
  }

  const Volume& domain() const { return domain_; }
  const std::vector<double>& values() const { return values_; }
  StateSpace space() const { return space_; }
  std::size_t size() const { return values_.size(); }
  bool contains(const Site& s) const { return domain_.contains(s); }

  double at(const Site& s) const {
    auto k = domain_.index_of(s);
    if (!k) throw CoverageError("Configuration: site " + s.str() + " outside domain " + domain_.str());
    return values_[*k];
  }
  double operator[](std::size_t k) const { return values_[k]; }

  void set(const Site& s, double v) {
    auto k = domain_.index_of(s);
    if (!k) throw CoverageError("Configuration: site " + s.str() + " outside domain");
    values_[*k] = space_ == StateSpace::circle ? wrap_circle(v) : v;
  }
  void set_index(std::size_t k, double v) { values_[k] = space_ == StateSpace::circle ? wrap_circle(v) : v; }

  Configuration with(const Site& s, double v) const {
    Configuration c = *this;
    c.set(s, v);
    return c;
  }

  Configuration restrict(const Volume& sub) const {
    Volume d = domain_.intersect(sub);
    std::vector<double> v;
    v.reserve(d.size());
    for (const auto& s : d) v.push_back(at(s));
    return Configuration(std::move(d), std::move(v), space_);
  }

  bool operator==(const Configuration&) const = default;

 private:
  Volume domain_;
  std::vector<double> values_;
  StateSpace space_ = StateSpace::line;
};

// Merge of configurations on disjoint domains.
inline Configuration concat(const Configuration& x, const Configuration& z) {
  if (x.domain().intersects(z.domain()))
    throw DomainConflictError("concat: domains overlap on " + x.domain().intersect(z.domain()).str());
  if (x.domain().empty()) return z;
  if (z.domain().empty()) return x;
  require(x.space() == z.space(), "concat: state spaces differ");
  Volume d = x.domain().unite(z.domain());
  std::vector<double> v;
  v.reserve(d.size());
  for (const auto& s : d) v.push_back(x.contains(s) ? x.at(s) : z.at(s));
  return Configuration(std::move(d), std::move(v), x.space());
}

}  // namespace gibbsprop
