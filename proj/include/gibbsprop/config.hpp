#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbsprop/bispace.hpp"
#include "gibbsprop/clusters.hpp"
#include "gibbsprop/drift.hpp"
#include "gibbsprop/error.hpp"
#include "gibbsprop/expansion.hpp"
#include "gibbsprop/gibbs.hpp"
#include "gibbsprop/girsanov.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/potential.hpp"
#include "gibbsprop/rng.hpp"

namespace gibbsprop {

using Json = nlohmann::json;

// One experiment, as read from a JSON file. Every key is documented in README.md.
struct ExperimentConfig {
  Json raw;  // resolved config, defaults filled in

  Volume vol;
  PotentialSpec pot;
  DriftSpec drift;  // at intensity beta
  Interaction phi;
  double t = 1.0;
  double beta = 0.1;
  std::vector<double> betas;
  MCParams mc;
  std::optional<TimeGrid> grid;  // absent: grid_for_beta
  int kmax = 2;
  int nmax = 3;
  std::vector<std::pair<Configuration, Configuration>> probes;
  std::size_t replicas = 1;
  Configuration x0;
  double kp_lambda = 0.0;
  GibbsParams gibbs;
  DlrParams dlr;
  Volume dlr_sub;
  Volume lam;
  std::vector<double> z_values;
  ConditionalParams cond;
  bool dynamic_expansion = false;
  std::vector<double> variant_quantiles{0.05, 0.95};
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  TimeGrid time_grid() const { return grid ? *grid : grid_for_beta(beta, drift.memory, t, mc.dt); }
  ClusterGeometry geometry() const { return {drift.nbhd, time_grid(), drift.memory}; }
};

namespace detail {

// Field-level readers: every failure names the dotted key path.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  bool has(const std::string& k) const { return j_.is_object() && j_.contains(k); }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  Reader sub(const std::string& k) const {
    static const Json empty = Json::object();
    if (!has(k)) return {empty, key(k)};
    if (!j_.at(k).is_object()) fail(k, "must be an object");
    return {j_.at(k), key(k)};
  }
  const Json& at(const std::string& k) const { return j_.at(k); }
  const Json& json() const { return j_; }

  [[noreturn]] void fail(const std::string& k, const std::string& what) const {
    throw ValidationError("config." + key(k) + ": " + what);
  }

  double number(const std::string& k, std::optional<double> fallback = {}) const {
    if (!has(k)) {
      if (fallback) return *fallback;
      fail(k, "is required");
    }
    if (!at(k).is_number()) fail(k, "must be a number");
    const double v = at(k).get<double>();
    if (!std::isfinite(v)) fail(k, "must be finite");
    return v;
  }
  double positive(const std::string& k, std::optional<double> fallback = {}) const {
    const double v = number(k, fallback);
    if (!(v > 0)) fail(k, "must be > 0");
    return v;
  }
  double nonnegative(const std::string& k, std::optional<double> fallback = {}) const {
    const double v = number(k, fallback);
    if (v < 0) fail(k, "must be >= 0");
    return v;
  }
  std::size_t count(const std::string& k, std::size_t fallback, std::size_t lo = 1) const {
    if (!has(k)) return fallback;
    if (!at(k).is_number_integer() || at(k).get<long long>() < static_cast<long long>(lo))
      fail(k, "must be an integer >= " + std::to_string(lo));
    return at(k).get<std::size_t>();
  }
  std::string text(const std::string& k, std::optional<std::string> fallback = {}) const {
    if (!has(k)) {
      if (fallback) return *fallback;
      fail(k, "is required");
    }
    if (!at(k).is_string()) fail(k, "must be a string");
    return at(k).get<std::string>();
  }
  std::vector<double> numbers(const std::string& k, std::vector<double> fallback = {}) const {
    if (!has(k)) return fallback;
    if (!at(k).is_array()) fail(k, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : at(k)) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) fail(k, "must be an array of finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<int> ints(const std::string& k) const {
    if (!at(k).is_array()) fail(k, "must be an array of integers");
    std::vector<int> out;
    for (const auto& e : at(k)) {
      if (!e.is_number_integer()) fail(k, "must be an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }
  bool flag(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!at(k).is_boolean()) fail(k, "must be true or false");
    return at(k).get<bool>();
  }

 private:
  const Json& j_;
  std::string path_;
};

inline Volume read_volume(const Reader& r, const std::string& k) {
  if (!r.has(k)) r.fail(k, "is required");
  const auto v = r.ints(k);
  if (v.size() != 2 || v[0] > v[1]) r.fail(k, "must be [lo, hi] with lo <= hi");
  return Volume::interval(v[0], v[1]);
}

inline Configuration read_config_values(const Reader& r, const std::string& k, const Volume& vol, StateSpace space) {
  const auto v = r.numbers(k);
  if (v.size() == 1) return Configuration::constant(vol, v[0], space);
  if (v.size() != vol.size()) r.fail(k, "needs 1 or " + std::to_string(vol.size()) + " values");
  return Configuration(vol, v, space);
}

inline PotentialSpec read_potential(const Reader& r) {
  const std::string kind = r.text("kind", "quadratic");
  if (kind == "quadratic") return PotentialSpec::quadratic(r.positive("a", 1.0));
  if (kind == "circle_free") return PotentialSpec::circle_free();
  if (kind == "double_well") return PotentialSpec::double_well();
  if (kind == "polynomial" || kind == "fourier") {
    const auto c = r.numbers("coeffs");
    if (c.empty()) r.fail("coeffs", "is required for kind '" + kind + "'");
    return kind == "polynomial" ? PotentialSpec::polynomial(c) : PotentialSpec::fourier(c);
  }
  r.fail("kind", "unknown potential '" + kind + "' (quadratic, circle_free, double_well, polynomial, fourier)");
}

inline Interaction read_interaction(const Reader& r, const Volume& vol) {
  const double beta0 = r.nonnegative("beta0", 0.0);
  std::vector<Term> terms;
  if (r.has("terms")) {
    if (!r.at("terms").is_array()) r.fail("terms", "must be an array");
    for (std::size_t k = 0; k < r.at("terms").size(); ++k) {
      const Reader t(r.at("terms")[k], r.key("terms[" + std::to_string(k) + "]"));
      const std::string kind = t.text("kind");
      const double J = t.number("J", 1.0);
      static const std::set<std::string> known{"pair_tanh", "pair_cos", "pair_product", "site_tanh", "site_cos"};
      if (!known.contains(kind)) t.fail("kind", "unknown term '" + kind + "' (pair_tanh, pair_cos, pair_product, site_tanh, site_cos)");
      try {
        auto add = kind.rfind("pair_", 0) == 0 ? nearest_neighbor_pairs(vol, kind, J) : single_site_terms(vol, kind, J);
        terms.insert(terms.end(), add.begin(), add.end());
      } catch (const ValidationError& e) {
        t.fail("kind", e.what());
      }
    }
  }
  return Interaction(std::move(terms), beta0);
}

}  // namespace detail

namespace detail {

inline Json values_json(const Configuration& c) { return Json(c.values()); }

inline Json volume_json(const Volume& v) { return Json::array({v[0][0], v[v.size() - 1][0]}); }

}  // namespace detail

// The config with every default written out; parsing it again gives the same experiment.
inline Json resolved_json(const ExperimentConfig& c, const Json& input) {
  Json j;
  j["lattice"] = {{"sites", detail::volume_json(c.vol)}};
  j["potential"] = input.value("potential", Json::object());
  if (!j["potential"].contains("kind")) j["potential"]["kind"] = "quadratic";
  j["drift"] = {{"name", c.drift.name}, {"params", c.drift.params}};
  j["interaction"] = input.value("interaction", Json::object());
  j["interaction"]["beta0"] = c.phi.beta0();
  j["t"] = c.t;
  j["beta"] = c.beta;
  j["betas"] = c.betas;
  j["mc"] = {{"samples", c.mc.samples},
             {"dt", c.mc.dt},
             {"ess_fraction", c.mc.ess_fraction},
             {"bandwidth_scale", c.mc.bandwidth_scale}};
  j["expansion"] = {{"kmax", c.kmax}, {"nmax", c.nmax}, {"kp_lambda", c.kp_lambda}};
  if (c.grid) {
    j["expansion"]["T"] = c.grid->T;
    j["expansion"]["M"] = c.grid->M;
  }
  Json pairs = Json::array();
  for (const auto& [x, y] : c.probes) pairs.push_back({{"x", detail::values_json(x)}, {"y", detail::values_json(y)}});
  j["probes"] = {{"pairs", pairs}, {"random", 0}};
  j["simulate"] = {{"replicas", c.replicas}, {"x0", detail::values_json(c.x0)}};
  j["gibbs"] = {{"sweeps", c.gibbs.sweeps},       {"burn_in", c.gibbs.burn_in},
                {"thin", c.gibbs.thin},           {"n_outer", c.dlr.n_outer},
                {"n_inner", c.dlr.n_inner},       {"inner_sweeps", c.dlr.inner_sweeps},
                {"dlr_burn_in", c.dlr.burn_in},   {"sub", detail::volume_json(c.dlr_sub)}};
  j["bispace"] = {{"lambda", detail::volume_json(c.lam)},
                  {"z", c.z_values},
                  {"chains", c.cond.chains},
                  {"burn_in", c.cond.burn_in},
                  {"draws", c.cond.draws},
                  {"thin", c.cond.thin},
                  {"companions", c.cond.companions},
                  {"dynamic", c.dynamic_expansion ? "expansion" : "none"},
                  {"variant_quantiles", c.variant_quantiles}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

inline ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  const detail::Reader r(j, "");
  ExperimentConfig c;

  c.vol = detail::read_volume(r.sub("lattice"), "sites");
  c.pot = detail::read_potential(r.sub("potential"));
  const auto space = c.pot.space;

  c.t = r.positive("t", 1.0);
  c.beta = r.nonnegative("beta", 0.1);
  c.betas = r.numbers("betas", {});
  for (double b : c.betas)
    if (b < 0) r.fail("betas", "entries must be >= 0");

  {
    const auto d = r.sub("drift");
    ParamMap params;
    if (d.has("params")) {
      if (!d.at("params").is_object()) d.fail("params", "must be an object of numbers");
      for (const auto& [k, v] : d.at("params").items()) {
        if (!v.is_number()) d.fail("params." + k, "must be a number");
        params[k] = v.get<double>();
      }
    }
    try {
      c.drift = make_drift(d.text("name", "markov_tanh"), params, c.beta);
    } catch (const ValidationError& e) {
      d.fail("name", e.what());
    }
  }

  c.phi = detail::read_interaction(r.sub("interaction"), c.vol);

  {
    const auto m = r.sub("mc");
    c.mc.samples = m.count("samples", 2000, 2);
    c.mc.dt = m.positive("dt", 0.01);
    c.mc.ess_fraction = m.nonnegative("ess_fraction", 0.01);
    c.mc.bandwidth_scale = m.positive("bandwidth_scale", 1.0);
    if (c.drift.memory > 0 && c.mc.dt > c.drift.memory + 1e-12) m.fail("dt", "must not exceed the drift memory t0");
  }

  {
    const auto e = r.sub("expansion");
    c.kmax = static_cast<int>(e.count("kmax", 2));
    c.nmax = static_cast<int>(e.count("nmax", 3));
    if (c.nmax > kMaxUrsellOrder) e.fail("nmax", "must be <= " + std::to_string(kMaxUrsellOrder));
    if (e.has("M") || e.has("T")) {
      const int M = static_cast<int>(e.count("M", 1));
      const double T = e.positive("T", c.t / M);
      if (std::abs(T * M - c.t) > 1e-9 * c.t) e.fail("T", "T * M must equal t");
      if (T + 1e-12 < c.drift.memory) e.fail("T", "must be >= the drift memory t0");
      c.grid = TimeGrid{T, M};
    }
    c.kp_lambda = e.nonnegative("kp_lambda", 0.0);
  }

  {
    const auto p = r.sub("probes");
    if (p.has("pairs")) {
      if (!p.at("pairs").is_array()) p.fail("pairs", "must be an array of {x, y}");
      for (std::size_t k = 0; k < p.at("pairs").size(); ++k) {
        const detail::Reader q(p.at("pairs")[k], p.key("pairs[" + std::to_string(k) + "]"));
        c.probes.push_back({detail::read_config_values(q, "x", c.vol, space), detail::read_config_values(q, "y", c.vol, space)});
      }
    }
    const std::size_t random = p.count("random", c.probes.empty() ? 3 : 0, 0);
    if (random > 0 || c.probes.empty()) {
      // Probe draws depend on the config only, not on the run seed.
      auto more = probe_pairs(c.pot, c.vol, random, p.count("seed", 7, 0));
      c.probes.insert(c.probes.end(), more.begin(), more.end());
    }
  }

  {
    const auto s = r.sub("simulate");
    c.replicas = s.count("replicas", 1);
    c.x0 = s.has("x0") ? detail::read_config_values(s, "x0", c.vol, space) : Configuration::constant(c.vol, 0.0, space);
  }

  {
    const auto g = r.sub("gibbs");
    c.gibbs.sweeps = g.count("sweeps", 200);
    c.gibbs.burn_in = g.count("burn_in", 50, 0);
    c.gibbs.thin = g.count("thin", 2);
    c.dlr.n_outer = g.count("n_outer", 200, 2);
    c.dlr.n_inner = g.count("n_inner", 20);
    c.dlr.inner_sweeps = g.count("inner_sweeps", 4);
    c.dlr.burn_in = g.count("dlr_burn_in", 100, 0);
    c.dlr_sub = g.has("sub") ? detail::read_volume(g, "sub") : Volume{c.vol[c.vol.size() / 2]};
    if (!c.dlr_sub.subset_of(c.vol)) g.fail("sub", "must lie inside lattice.sites");
  }

  {
    const auto b = r.sub("bispace");
    c.lam = b.has("lambda") ? detail::read_volume(b, "lambda") : Volume{c.vol[c.vol.size() / 2]};
    if (!c.lam.subset_of(c.vol)) b.fail("lambda", "must lie inside lattice.sites");
    if (c.lam.size() != 1) b.fail("lambda", "must be a single site");
    c.z_values = b.numbers("z", {-1.0, 0.0, 1.0});
    c.cond.chains = b.count("chains", 16, 2);
    c.cond.burn_in = b.count("burn_in", 40, 0);
    c.cond.draws = b.count("draws", 20);
    c.cond.thin = b.count("thin", 2);
    c.cond.companions = b.count("companions", 4);
    c.dynamic_expansion = b.text("dynamic", "none") == "expansion";
    if (!c.dynamic_expansion && b.text("dynamic", "none") != "none") b.fail("dynamic", "must be 'none' or 'expansion'");
    c.variant_quantiles = b.numbers("variant_quantiles", {0.05, 0.95});
    for (double q : c.variant_quantiles)
      if (!(q > 0 && q < 1)) b.fail("variant_quantiles", "entries must lie in (0, 1)");
  }

  if (r.has("seed")) {
    if (!j.at("seed").is_number_unsigned()) r.fail("seed", "must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.output_dir = r.text("output_dir", "out");

  c.raw = resolved_json(c, j);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// FNV-1a of the canonical JSON (sorted keys) with the seed and output directory removed,
// so runs of one experiment under different seeds share a hash.
inline std::string config_hash(const Json& raw) {
  Json j = raw;
  j.erase("seed");
  j.erase("output_dir");
  std::ostringstream os;
  os << std::hex << fnv1a(j.dump());
  std::string h = os.str();
  return std::string(16 - h.size(), '0') + h;
}

}  // namespace gibbsprop
