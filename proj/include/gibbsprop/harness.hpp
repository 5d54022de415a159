#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gibbsprop/config.hpp"
#include "gibbsprop/simulate.hpp"

namespace gibbsprop {

namespace fs = std::filesystem;

// One numeric output: value with its standard error, or exact.
struct Row {
  std::string quantity;
  std::string label;
  double value = 0.0;
  double std_err = 0.0;
  bool exact = true;
  std::size_t n = 0;

  static Row of(std::string q, std::string l, const Estimate& e) {
    return {std::move(q), std::move(l), e.value, e.std_err, e.exact, e.n};
  }
  static Row exact_value(std::string q, std::string l, double v) { return {std::move(q), std::move(l), v, 0.0, true, 0}; }
  static Row mc(std::string q, std::string l, double v, double se, std::size_t n) {
    return {std::move(q), std::move(l), v, se, false, n};
  }
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + p.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline constexpr const char* kCsvHeader = "quantity,label,value,stderr,n,seed,config_hash";

// Single writer for one run: CSV rows, JSON-lines tables and binary blobs, all
// recorded for the manifest in write order.
class ArtifactWriter {
 public:
  ArtifactWriter(fs::path dir, std::uint64_t seed, std::string hash)
      : dir_(std::move(dir)), seed_(seed), hash_(std::move(hash)) {
    fs::create_directories(dir_);
  }

  void rows(const std::string& name, const std::vector<Row>& rs) {
    std::ostringstream os;
    os << kCsvHeader << "\n";
    for (const auto& r : rs)
      os << r.quantity << "," << r.label << "," << format_double(r.value) << ","
         << (r.exact ? std::string("exact") : format_double(r.std_err)) << "," << r.n << "," << seed_ << "," << hash_
         << "\n";
    put(name, os.str());
  }

  void jsonl(const std::string& name, const std::vector<Json>& records) {
    std::ostringstream os;
    for (auto r : records) {
      r["seed"] = seed_;
      r["config_hash"] = hash_;
      os << r.dump() << "\n";
    }
    put(name, os.str());
  }

  void blob(const std::string& name, const std::string& bytes) { put(name, bytes); }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  void put(const std::string& name, const std::string& bytes) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + (dir_ / name).string() + "'");
    out << bytes;
    files_.push_back(name);
  }

  fs::path dir_;
  std::uint64_t seed_;
  std::string hash_;
  std::vector<std::string> files_;
};

struct ParsedRow {
  Row row;
  std::uint64_t seed = 0;
  std::string hash;
};

inline std::vector<ParsedRow> read_rows(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line;
  std::getline(in, line);
  if (line != kCsvHeader) throw ValidationError("'" + p.string() + "' is not a result table");
  std::vector<ParsedRow> out;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw ValidationError("'" + p.string() + "': malformed row '" + line + "'");
    ParsedRow r;
    r.row.quantity = f[0];
    r.row.label = f[1];
    r.row.value = std::stod(f[2]);
    r.row.exact = f[3] == "exact";
    r.row.std_err = r.row.exact ? 0.0 : std::stod(f[3]);
    r.row.n = std::stoul(f[4]);
    r.seed = std::stoull(f[5]);
    r.hash = f[6];
    out.push_back(std::move(r));
  }
  return out;
}

struct RunOptions {
  fs::path out;
  unsigned threads = 1;
};

namespace detail {

inline std::string probe_label(std::size_t k) { return "probe" + std::to_string(k); }

inline std::string num_label(const std::string& name, double v) { return name + "=" + format_double(v); }

inline Estimate log_of(const DensityEstimate& d) {
  return {d.log_value, d.value > 0 ? d.std_err / d.value : 0.0, d.n, false};
}

inline BiSpaceInteraction make_bispace(const ExperimentConfig& c, unsigned threads) {
  BiSpaceInteraction b;
  b.initial = c.phi;
  b.kernel = std::make_shared<const FreeKernel>(c.pot);
  b.t = c.t;
  if (c.dynamic_expansion && c.beta > 0) {
    MCParams mc = c.mc;
    mc.threads = threads;
    auto engine = std::make_shared<const WeightEngine>(c.drift, b.kernel, c.vol, c.time_grid(), c.kmax, mc);
    b.dynamic = std::make_shared<const ExpansionDynamicInteraction>(engine, c.nmax, derive_seed(c.seed, "dynamic"));
  }
  return b;
}

inline std::string paths_blob(const std::vector<PathBundle>& paths) {
  std::ostringstream os;
  auto put64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
  os.write("GPPATHS1", 8);
  put64(paths.size());
  put64(paths.empty() ? 0 : paths[0].sites().size());
  put64(paths.empty() ? 0 : paths[0].steps());
  const double dt = paths.empty() ? 0.0 : paths[0].dt();
  os.write(reinterpret_cast<const char*>(&dt), sizeof dt);
  for (const auto& p : paths)
    os.write(reinterpret_cast<const char*>(p.raw_values().data()),
             static_cast<std::streamsize>(p.raw_values().size() * sizeof(double)));
  return os.str();
}

inline void run_simulate(const ExperimentConfig& c, const RunOptions& o, ArtifactWriter& w) {
  const auto paths = simulate_replicas(c.drift, c.pot, c.vol, c.x0, c.t, c.mc.dt, c.seed, c.replicas, o.threads);
  w.blob("paths.bin", paths_blob(paths));
  std::vector<Row> rows;
  for (std::size_t s = 0; s < c.vol.size(); ++s) {
    MeanAccumulator a;
    for (const auto& p : paths) a.add(p.terminal(s));
    rows.push_back(Row::mc("terminal_mean", c.vol[s].str(), a.mean(), a.std_err(), a.count()));
  }
  for (std::size_t r = 0; r < paths.size(); ++r)
    for (std::size_t s = 0; s < c.vol.size(); ++s)
      rows.push_back(Row::exact_value("terminal", "r" + std::to_string(r) + c.vol[s].str(), paths[r].terminal(s)));
  w.rows("simulate.csv", rows);
}

inline void run_density(const ExperimentConfig& c, const RunOptions& o, ArtifactWriter& w) {
  MCParams mc = c.mc;
  mc.threads = o.threads;
  std::vector<Row> rows;
  for (std::size_t k = 0; k < c.probes.size(); ++k) {
    const auto& [x, y] = c.probes[k];
    const auto d = density(c.drift, c.pot, c.vol, x, y, c.t, mc, derive_seed(c.seed, "density", k));
    rows.push_back(Row::mc("density", probe_label(k), d.value, d.std_err, d.n));
    rows.push_back(Row::of("log_density", probe_label(k), log_of(d)));
    rows.push_back(Row::exact_value("ess", probe_label(k), d.ess));
  }
  w.rows("density.csv", rows);
}

inline void run_expand(const ExperimentConfig& c, const RunOptions& o, ArtifactWriter& w) {
  MCParams mc = c.mc;
  mc.threads = o.threads;
  const TimeGrid grid = c.time_grid();
  const WeightEngine engine(c.drift, c.pot, c.vol, grid, c.kmax, mc);
  std::vector<Row> rows{Row::exact_value("grid_T", "", grid.T), Row::exact_value("grid_M", "", grid.M),
                        Row::exact_value("clusters", "", static_cast<double>(engine.universe().size()))};
  std::vector<Json> weights, phis;
  std::vector<InteractionTable> tables;
  const std::uint64_t seed = derive_seed(c.seed, "expand");
  for (std::size_t k = 0; k < c.probes.size(); ++k) {
    const auto& [x, y] = c.probes[k];
    const auto table = weight_table(engine, x, y, seed);
    for (std::size_t p = 0; p < table.size(); ++p) {
      const auto& e = table.weights[p];
      weights.push_back({{"probe", probe_label(k)},
                         {"cluster", table.cluster(p).key()},
                         {"size", table.cluster(p).size()},
                         {"value", e.value},
                         {"stderr", e.exact ? Json("exact") : Json(e.std_err)}});
    }
    rows.push_back(Row::of("reconstructed_density", probe_label(k), reconstruct_density(table)));
    const auto it = interaction_terms(table, c.nmax);
    for (const auto& [delta, e] : it.terms)
      phis.push_back({{"probe", probe_label(k)},
                      {"delta", delta.str()},
                      {"value", e.value},
                      {"stderr", e.exact ? Json("exact") : Json(e.std_err)}});
    rows.push_back(Row::of("log_density_series", probe_label(k), it.log_density()));
    rows.push_back(Row::exact_value("collections", probe_label(k), static_cast<double>(it.collections)));
    tables.push_back(it);
  }
  const auto sr = summability_report(tables);
  rows.push_back(Row::exact_value("summability_sup", sr.worst_site.str(), sr.sup));
  if (!c.betas.empty()) {
    WeightFitInstance inst{c.drift, c.pot, c.vol, c.probes[0].first, c.probes[0].second, c.t, c.kmax, {}};
    for (const auto& r : weight_bound_fit(c.betas, inst, mc, seed)) {
      const auto l = num_label("beta", r.beta);
      rows.push_back(Row::exact_value("lambda_hat", l, r.lambda_hat));
      rows.push_back(Row::exact_value("lambda_lo", l, r.lambda_lo));
      rows.push_back(Row::exact_value("lambda_hi", l, r.lambda_hi));
      rows.push_back(Row::mc("c1", l, r.c1, r.c1_err, mc.samples));
      rows.push_back(Row::exact_value("c2", l, r.c2));
      rows.push_back(Row::exact_value("fit_M", l, r.grid.M));
    }
  }
  w.rows("expand.csv", rows);
  w.jsonl("weights.jsonl", weights);
  w.jsonl("phi.jsonl", phis);
}

inline void run_kp(const ExperimentConfig& c, const RunOptions&, ArtifactWriter& w) {
  const ClusterUniverse U(c.vol, c.geometry(), c.kmax);
  const auto r = kp_check(c.kp_lambda, U);
  const auto ls = lambda_star(U);
  w.rows("kp.csv", {Row::exact_value("clusters", "", static_cast<double>(U.size())),
                    Row::exact_value("kp_satisfied", num_label("lambda", c.kp_lambda), r.satisfied ? 1 : 0),
                    Row::exact_value("kp_worst_ratio", num_label("lambda", c.kp_lambda), r.worst_ratio),
                    Row::exact_value("lambda_star", "", ls.lambda),
                    Row::exact_value("lambda_star_step", "", ls.step)});
}

inline void run_dobrushin(const ExperimentConfig& c, const RunOptions&, ArtifactWriter& w) {
  const auto r = dobrushin_check(c.phi);
  std::vector<Row> rows{Row::exact_value("dobrushin", "", r.value),
                        Row::exact_value("dobrushin_passes", "", r.passes ? 1 : 0)};
  for (const auto& [i, s] : r.per_site) rows.push_back(Row::exact_value("dobrushin_site", i.str(), c.phi.beta0() * s));
  w.rows("dobrushin.csv", rows);
}

inline void run_dlr(const ExperimentConfig& c, const RunOptions&, ArtifactWriter& w) {
  const auto rep = dlr_test(c.phi, c.pot, c.vol, c.dlr_sub, c.dlr, derive_seed(c.seed, "dlr"));
  std::vector<Row> rows;
  for (const auto& e : rep.entries) {
    rows.push_back(Row::of("dlr_discrepancy", e.name, e.discrepancy));
    rows.push_back(Row::of("dlr_direct", e.name, e.direct));
    rows.push_back(Row::of("dlr_two_stage", e.name, e.two_stage));
  }
  rows.push_back(Row::exact_value("dlr_max_abs_z", "", rep.max_abs_z));
  rows.push_back(Row::exact_value("acceptance", "", rep.acceptance));
  if (c.dlr_sub.size() == 1) {
    const Site i = c.dlr_sub[0];
    const auto boundary = c.probes[0].first.restrict(c.vol.minus(c.dlr_sub));
    const auto ks = conditional_ks_test(c.phi, c.pot, i, boundary, c.dlr.n_outer, c.gibbs.burn_in + 1,
                                        derive_seed(c.seed, "ks"));
    rows.push_back(Row::exact_value("ks_statistic", i.str(), ks.statistic));
    rows.push_back(Row::exact_value("ks_p_value", i.str(), ks.p_value));
  }
  w.rows("dlr.csv", rows);
}

inline void run_bispace(const ExperimentConfig& c, const RunOptions& o, ArtifactWriter& w) {
  const auto b = make_bispace(c, o.threads);
  ConditionalParams cp = c.cond;
  cp.threads = o.threads;
  const Volume out = c.vol.minus(c.lam);
  const auto y_out = c.probes[0].second.restrict(out);
  std::vector<Row> rows;
  for (double z : c.z_values) {
    const auto g = conditional_density(b, c.vol, c.lam, Configuration(c.lam, {z}, c.pot.space), y_out, cp,
                                       derive_seed(c.seed, "bispace"));
    rows.push_back(Row::of("conditional_density", num_label("z", z), g));
  }
  w.rows("bispace.csv", rows);
}

inline void run_quasilocality(const ExperimentConfig& c, const RunOptions& o, ArtifactWriter& w) {
  const auto b = make_bispace(c, o.threads);
  ConditionalParams cp = c.cond;
  cp.threads = o.threads;
  const Volume out = c.vol.minus(c.lam);
  const Site centre = c.lam[0];
  int rmax = 0;
  for (const auto& i : out) rmax = std::max(rmax, std::abs(i[0] - centre[0]));
  std::vector<Volume> deltas;
  for (int r = 0; r <= rmax; ++r) {
    std::vector<Site> s;
    for (const auto& i : out)
      if (std::abs(i[0] - centre[0]) <= r) s.push_back(i);
    deltas.push_back(Volume(std::move(s)));
  }
  const ReferenceMeasure m(c.pot);
  std::vector<Configuration> variants;
  for (double q : c.variant_quantiles) variants.push_back(Configuration::constant(out, m.quantile(q), c.pot.space));
  const double z = c.z_values.empty() ? 0.0 : c.z_values[0];
  const auto curve = quasilocality_probe(b, c.vol, c.lam, Configuration(c.lam, {z}, c.pot.space),
                                         c.probes[0].second.restrict(out), variants, deltas, cp,
                                         derive_seed(c.seed, "quasilocality"));
  std::vector<Row> rows;
  for (std::size_t r = 0; r < curve.points.size(); ++r) {
    const auto l = "r=" + std::to_string(r);
    const auto& p = curve.points[r];
    rows.push_back(Row::mc("variation", l, p.variation, p.std_err, cp.chains));
    rows.push_back(Row::exact_value("variation_max_z", l, p.max_z));
  }
  rows.push_back(Row::exact_value("noise_floor", "", curve.noise_floor));
  rows.push_back(Row::exact_value("non_increasing", "", curve.non_increasing ? 1 : 0));
  w.rows("quasilocality.csv", rows);
}

// Summaries across the result tables already in the directory: the identity
// residuals when both density and expand ran, and every table as plot-ready JSON.
inline void run_report(const ExperimentConfig&, const RunOptions& o, ArtifactWriter& w) {
  std::map<std::string, std::vector<ParsedRow>> tables;
  for (const auto& entry : fs::directory_iterator(o.out)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() == ".csv" && name != "report.csv") tables[name] = read_rows(entry.path());
  }
  auto find = [&](const std::string& file, const std::string& q, const std::string& l) -> const Row* {
    auto it = tables.find(file);
    if (it == tables.end()) return nullptr;
    for (const auto& r : it->second)
      if (r.row.quantity == q && r.row.label == l) return &r.row;
    return nullptr;
  };
  std::vector<Row> rows;
  for (std::size_t k = 0;; ++k) {
    const auto l = probe_label(k);
    const Row* ld = find("density.csv", "log_density", l);
    const Row* ls = find("expand.csv", "log_density_series", l);
    const Row* d = find("density.csv", "density", l);
    const Row* rd = find("expand.csv", "reconstructed_density", l);
    if (!ld && !ls) break;
    if (ld && ls) {
      const double se = std::hypot(ld->std_err, ls->std_err);
      rows.push_back(Row::mc("log_identity_residual", l, ld->value - ls->value, se, ld->n));
      rows.push_back(Row::exact_value("log_identity_z", l, se > 0 ? (ld->value - ls->value) / se : 0.0));
    }
    if (d && rd) {
      const double se = std::hypot(d->std_err, rd->std_err);
      rows.push_back(Row::mc("reconstruction_residual", l, d->value - rd->value, se, d->n));
      rows.push_back(Row::exact_value("reconstruction_z", l, se > 0 ? (d->value - rd->value) / se : 0.0));
    }
  }
  Json summary = Json::object();
  for (const auto& [name, rs] : tables) {
    Json series = Json::object();
    for (const auto& r : rs) {
      series[r.row.quantity]["label"].push_back(r.row.label);
      series[r.row.quantity]["value"].push_back(r.row.value);
      series[r.row.quantity]["stderr"].push_back(r.row.exact ? Json("exact") : Json(r.row.std_err));
    }
    summary[name] = series;
  }
  w.rows("report.csv", rows);
  w.blob("summary.json", summary.dump(1) + "\n");
}

using SubcommandFn = std::function<void(const ExperimentConfig&, const RunOptions&, ArtifactWriter&)>;

inline const std::map<std::string, SubcommandFn>& subcommands() {
  static const std::map<std::string, SubcommandFn> table = {
      {"simulate", run_simulate}, {"density", run_density},     {"expand", run_expand},
      {"kp", run_kp},             {"dobrushin", run_dobrushin}, {"dlr", run_dlr},
      {"bispace", run_bispace},   {"quasilocality", run_quasilocality}, {"report", run_report},
  };
  return table;
}

struct ManifestEntry {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> files;  // name, fnv1a of contents
};

inline std::string manifest_block(const ManifestEntry& e) {
  std::ostringstream os;
  os << "run " << e.subcommand << "\n";
  os << "  seed " << e.seed << "\n";
  os << "  config_hash " << e.config_hash << "\n";
  for (const auto& [f, h] : e.files) os << "  file " << f << " " << h << "\n";
  return os.str();
}

inline std::vector<ManifestEntry> read_manifest(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<ManifestEntry> out;
  std::string word;
  while (in >> word) {
    if (word == "run") {
      out.emplace_back();
      in >> out.back().subcommand;
    } else if (out.empty()) {
      throw ValidationError("manifest '" + p.string() + "' is malformed");
    } else if (word == "seed") {
      in >> out.back().seed;
    } else if (word == "config_hash") {
      in >> out.back().config_hash;
    } else if (word == "file") {
      std::string f, h;
      in >> f >> h;
      out.back().files.push_back({f, h});
    } else {
      throw ValidationError("manifest '" + p.string() + "': unknown entry '" + word + "'");
    }
  }
  return out;
}

}  // namespace detail

// Runs one subcommand; writes its tables, the resolved config.json and appends
// to manifest.txt. An output directory holds one experiment and seed.
inline ExitCode run(const std::string& sub, const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto& table = detail::subcommands();
  const auto it = table.find(sub);
  if (it == table.end()) throw ValidationError("unknown subcommand '" + sub + "'");
  const std::string hash = config_hash(cfg.raw);
  fs::create_directories(opt.out);
  const std::string resolved = cfg.raw.dump(2) + "\n";
  const fs::path cfg_path = opt.out / "config.json";
  if (fs::exists(cfg_path) && read_file(cfg_path) != resolved)
    throw ValidationError("output directory '" + opt.out.string() +
                          "' already holds a different experiment or seed (config.json differs)");
  {
    std::ofstream(cfg_path, std::ios::binary | std::ios::trunc) << resolved;
  }
  ArtifactWriter w(opt.out, cfg.seed, hash);
  it->second(cfg, opt, w);
  detail::ManifestEntry e{sub, cfg.seed, hash, {}};
  for (const auto& f : w.files()) e.files.push_back({f, hex64(fnv1a(read_file(opt.out / f)))});
  std::ofstream(opt.out / "manifest.txt", std::ios::app) << detail::manifest_block(e);
  return ExitCode::ok;
}

inline ExperimentConfig with_seed(ExperimentConfig c, std::uint64_t seed) {
  c.seed = seed;
  c.raw["seed"] = seed;
  return c;
}

struct ReplayResult {
  bool identical = false;    // every file matched byte for byte
  bool statistical = false;  // a different seed was requested: tables compared within error bars
  std::size_t files = 0;
  std::size_t rows_compared = 0;
  std::size_t rows_outside = 0;  // statistical mode: rows beyond 4 combined stderr
  std::string first_divergence;

  ExitCode exit_code() const { return identical || statistical ? ExitCode::ok : ExitCode::replay_mismatch; }
};

namespace detail {

inline std::string first_divergent_line(const std::string& name, const std::string& a, const std::string& b) {
  std::istringstream ia(a), ib(b);
  std::string la, lb;
  for (std::size_t line = 1;; ++line) {
    const bool ga = static_cast<bool>(std::getline(ia, la)), gb = static_cast<bool>(std::getline(ib, lb));
    if (!ga && !gb) return name + ": contents differ";
    if (!ga || !gb || la != lb)
      return name + " line " + std::to_string(line) + ": recorded '" + (ga ? la : "<end>") + "', replayed '" +
             (gb ? lb : "<end>") + "'";
  }
}

}  // namespace detail

// Re-runs every manifest entry of an artifact directory into a scratch directory
// and compares outputs. Without a seed override the outputs must be bitwise
// identical; with a different seed, CSV rows are compared within 4 combined stderr
// and the result is flagged statistical instead of failed.
inline ReplayResult replay(const fs::path& dir, std::optional<std::uint64_t> seed_override = {},
                           unsigned threads = 1) {
  const auto manifest = detail::read_manifest(dir / "manifest.txt");
  if (manifest.empty()) throw ValidationError("replay: manifest in '" + dir.string() + "' lists no runs");
  Json j;
  try {
    j = Json::parse(read_file(dir / "config.json"));
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("replay: config.json is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg = parse_config(j);
  ReplayResult res;
  res.statistical = seed_override && *seed_override != cfg.seed;
  if (seed_override) cfg = with_seed(cfg, *seed_override);
  const fs::path scratch = dir / ".replay";
  fs::remove_all(scratch);
  for (const auto& e : manifest) run(e.subcommand, cfg, {scratch, threads});
  res.identical = true;
  for (const auto& e : manifest)
    for (const auto& [f, h] : e.files) {
      ++res.files;
      const std::string a = read_file(dir / f), b = read_file(scratch / f);
      if (hex64(fnv1a(a)) != h && res.first_divergence.empty())
        res.first_divergence = f + ": contents do not match the manifest hash";
      if (a != b) {
        res.identical = false;
        if (res.first_divergence.empty()) res.first_divergence = detail::first_divergent_line(f, a, b);
      }
      if (res.statistical && fs::path(f).extension() == ".csv") {
        const auto ra = read_rows(dir / f), rb = read_rows(scratch / f);
        for (std::size_t k = 0; k < std::min(ra.size(), rb.size()); ++k) {
          if (ra[k].row.exact || rb[k].row.exact) continue;
          ++res.rows_compared;
          const double se = std::hypot(ra[k].row.std_err, rb[k].row.std_err);
          if (std::abs(ra[k].row.value - rb[k].row.value) > 4.0 * se) ++res.rows_outside;
        }
      }
    }
  if (!res.first_divergence.empty() && res.identical) res.identical = false;
  fs::remove_all(scratch);
  return res;
}

}  // namespace gibbsprop
