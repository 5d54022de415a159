#include <gtest/gtest.h>

#include <cmath>

#include "gibbsprop/expansion.hpp"

using namespace gibbsprop;

namespace {

double gauss(double y, double m, double v) { return std::exp(-(y - m) * (y - m) / (2 * v)) / std::sqrt(kTwoPi * v); }

// Transition density ratio of dX = (cb - a X) dt + dB against the OU.
double shifted_ou_ratio(double a, double cb, double t, double x, double y) {
  const double e = std::exp(-a * t), v = (1 - e * e) / (2 * a), mu = cb / a;
  return gauss(y, mu + (x - mu) * e, v) / gauss(y, x * e, v);
}

// OU kernel with respect to m = N(0, 1/(2a)).
double ou_kernel(double a, double t, double x, double y) {
  const double e = std::exp(-a * t);
  return gauss(y, x * e, (1 - e * e) / (2 * a)) / gauss(y, 0.0, 1 / (2 * a));
}

// Trapezoid integral of g against m = N(0, 1/(2a)).
template <class G>
double integrate_m(double a, G g) {
  const double s = std::sqrt(1 / (2 * a)), lo = -9 * s, hi = 9 * s;
  const int n = 4000;
  const double h = (hi - lo) / n;
  double acc = 0;
  for (int k = 0; k <= n; ++k) {
    const double z = lo + h * k;
    acc += (k == 0 || k == n ? 0.5 : 1.0) * g(z) * gauss(z, 0.0, s * s);
  }
  return acc * h;
}

Configuration at(const Volume& v, double c) { return Configuration::constant(v, c); }

// Drift at site 0 reading site 1 only: b = A tanh(x_1).
DriftSpec one_sided_drift(double A, double beta) {
  DriftSpec d;
  d.name = "one_sided";
  d.beta = beta;
  d.nbhd = Neighborhood(Volume{Site{0}, Site{1}});
  d.bound = std::abs(A);
  d.eval = [A](const PathView& v) { return A * std::tanh(v.at(Site{1}, 0)); };
  return d;
}

}  // namespace

TEST(Weights, ZeroIntensityGivesExactZeros) {
  const Volume vol = Volume::interval(0, 3);
  MCParams mc;
  mc.samples = 50;
  const WeightEngine e(markov_tanh_drift({}, 0.0), PotentialSpec::quadratic(), vol, {1.0, 2}, 2, mc);
  for (std::size_t p = 0; p < e.universe().size(); ++p) {
    const auto w = e.weight(p, at(vol, 0.3), at(vol, -0.2), 1);
    EXPECT_TRUE(w.exact);
    EXPECT_EQ(w.value, 0.0);
  }
}

TEST(Weights, PureTimeClusterIntegratesToZero) {
  const Volume vol{Site{0}};
  MCParams mc;
  mc.samples = 20000;
  const WeightEngine e(markov_tanh_drift({{"range", 0}}, 0.0), PotentialSpec::quadratic(), vol, {1.0, 3}, 2, mc);
  int checked = 0;
  for (std::size_t p = 0; p < e.universe().size(); ++p) {
    if (!e.universe().pure_time(p)) continue;
    const auto w = e.weight(p, at(vol, 0.7), at(vol, -0.4), 3, false);
    EXPECT_FALSE(w.exact);
    EXPECT_GT(w.std_err, 0.0);
    EXPECT_LT(std::abs(w.value) / w.std_err, 4.0) << e.universe().cluster(p).key();
    ++checked;
  }
  EXPECT_EQ(checked, 3);  // T0, T1, T0-1
}

TEST(Weights, MatchOuQuadrature) {
  const double a = 1.0, c = 1.0, beta = 0.3, T = 1.0, x = 0.4, y = -0.3;
  const Volume vol{Site{0}};
  MCParams mc;
  mc.samples = 20000;
  mc.dt = 0.005;
  const WeightEngine e(constant_drift(c, beta), PotentialSpec::quadratic(a), vol, {T, 2}, 3, mc);
  auto f = [&](double u, double v) { return shifted_ou_ratio(a, beta * c, T, u, v); };
  auto q0 = [&](double z) { return ou_kernel(a, T, x, z) * ou_kernel(a, T, z, y) / ou_kernel(a, 2 * T, x, y); };
  std::map<std::string, double> oracle{
      {"S0:(0);", integrate_m(a, [&](double z) { return f(x, z) - 1; })},
      {"S1:(0);", integrate_m(a, [&](double z) { return f(z, y) - 1; })},
      {"T(0):0-0;", 0.0},
      {"S0:(0);S1:(0);", integrate_m(a, [&](double z) { return (f(x, z) - 1) * (f(z, y) - 1); })},
      {"S0:(0);T(0):0-0;", integrate_m(a, [&](double z) { return (f(x, z) - 1) * (q0(z) - 1); })},
      {"S1:(0);T(0):0-0;", integrate_m(a, [&](double z) { return (q0(z) - 1) * (f(z, y) - 1); })},
      {"S0:(0);S1:(0);T(0):0-0;", integrate_m(a, [&](double z) { return (f(x, z) - 1) * (q0(z) - 1) * (f(z, y) - 1); })},
  };
  ASSERT_EQ(e.universe().size(), oracle.size());
  const auto table = weight_table(e, at(vol, x), at(vol, y), 11);
  double sum = 1.0;
  for (std::size_t p = 0; p < table.size(); ++p) {
    const auto key = table.cluster(p).key();
    ASSERT_TRUE(oracle.count(key)) << "[" << key << "]";
    const auto& w = table.weights[p];
    if (w.exact) EXPECT_EQ(w.value, oracle[key]);
    else EXPECT_LT(std::abs(w.value - oracle[key]) / w.std_err, 4.0) << key << " " << w.value << " vs " << oracle[key];
    sum += oracle[key];
  }
  // All clusters share the middle layer, so 1 + sum K is the two-slice density.
  EXPECT_NEAR(sum, shifted_ou_ratio(a, beta * c, 2 * T, x, y), 1e-8);
  const auto r = reconstruct_density(table);
  EXPECT_LT(std::abs(r.value - shifted_ou_ratio(a, beta * c, 2 * T, x, y)) / r.std_err, 4.0);
}

TEST(Reconstruct, TrivialTables) {
  const Volume vol = Volume::interval(0, 2);
  auto U = std::make_shared<ClusterUniverse>(vol, ClusterGeometry{Neighborhood::nearest(), {1.0, 2}, 0.0}, 2);
  WeightTable t{U, std::vector<Estimate>(U->size(), Estimate::exact_value(0.0)), {1.0, 2}, 2};
  const auto r0 = reconstruct_density(t);
  EXPECT_EQ(r0.value, 1.0);
  EXPECT_TRUE(r0.exact);
  t.weights[2] = {0.25, 0.01, 100, false};
  const auto r1 = reconstruct_density(t);
  EXPECT_DOUBLE_EQ(r1.value, 1.25);
  EXPECT_DOUBLE_EQ(r1.std_err, 0.01);
  // Two compatible clusters add their product.
  std::size_t p = 0, q = 0;
  for (std::size_t a = 0; a < U->size() && !q; ++a)
    for (std::size_t b = a + 1; b < U->size(); ++b)
      if (U->polymer_size(a) == 1 && U->polymer_size(b) == 1 && !U->conflict(a, b)) {
        p = a;
        q = b;
        break;
      }
  ASSERT_NE(q, 0u);
  std::fill(t.weights.begin(), t.weights.end(), Estimate::exact_value(0.0));
  t.weights[p] = Estimate::exact_value(0.5);
  t.weights[q] = Estimate::exact_value(-0.2);
  EXPECT_DOUBLE_EQ(reconstruct_density(t).value, 1 + 0.5 - 0.2 - 0.1);
}

TEST(Reconstruct, BudgetError) {
  const Volume vol = Volume::interval(0, 5);
  auto U = std::make_shared<ClusterUniverse>(vol, ClusterGeometry{Neighborhood::single(), {1.0, 2}, 0.0}, 3);
  WeightTable t{U, std::vector<Estimate>(U->size(), Estimate::exact_value(0.1)), {1.0, 2}, 3};
  EXPECT_THROW(reconstruct_density(t, 10), BudgetError);
}

TEST(Interaction, LogSeriesOfReconstruction) {
  // With every cluster conflicting (one site), log(1 + sum K) = -sum Phi up to O(K^(n+1)).
  const Volume vol{Site{0}};
  auto U = std::make_shared<ClusterUniverse>(vol, ClusterGeometry{Neighborhood::single(), {1.0, 2}, 0.0}, 3);
  WeightTable t{U, {}, {1.0, 2}, 3};
  const double ks[] = {0.02, -0.013, 0.0, 0.007, -0.004, 0.011, 0.003};
  for (std::size_t p = 0; p < U->size(); ++p) t.weights.push_back(Estimate::exact_value(ks[p]));
  const double r = reconstruct_density(t).value;
  for (int n = 1; n <= 6; ++n) {
    const auto it = interaction_terms(t, n);
    EXPECT_LT(std::abs(-it.total.value - std::log(r)), 2 * std::pow(0.04, n + 1)) << n;
  }
  EXPECT_NEAR(-interaction_terms(t, 6).total.value, std::log(r), 1e-11);
}

TEST(Interaction, ZeroWhenAllWeightsVanish) {
  const Volume vol = Volume::interval(0, 3);
  MCParams mc;
  mc.samples = 20;
  const WeightEngine e(markov_tanh_drift({}, 0.0), PotentialSpec::quadratic(), vol, {1.0, 2}, 2, mc);
  const auto it = interaction_terms(weight_table(e, at(vol, 0.1), at(vol, 0.2), 5), 3);
  EXPECT_TRUE(it.terms.empty());
  EXPECT_EQ(it.total.value, 0.0);
  const auto z = it.at(Volume{Site{0}, Site{2}});
  EXPECT_TRUE(z.exact);
  EXPECT_EQ(z.value, 0.0);
}

TEST(Interaction, MeasurableWithRespectToDelta) {
  const Volume vol = Volume::interval(0, 4);
  MCParams mc;
  mc.samples = 200;
  mc.dt = 0.02;
  const WeightEngine e(markov_tanh_drift({{"A", 1.0}, {"coupling", 1.0}}, 0.3), PotentialSpec::quadratic(), vol,
                       {1.0, 2}, 2, mc);
  auto x = at(vol, 0.2), y = at(vol, -0.1);
  const auto base = interaction_terms(weight_table(e, x, y, 9), 2);
  x.set(Site{4}, 1.5);
  y.set(Site{4}, -1.2);
  const auto moved = interaction_terms(weight_table(e, x, y, 9), 2);
  ASSERT_FALSE(base.terms.empty());
  int unchanged = 0, changed = 0;
  for (const auto& [delta, v] : base.terms) {
    if (!delta.contains(Site{4})) {
      EXPECT_EQ(moved.at(delta).value, v.value) << delta.str();
      ++unchanged;
    } else {
      changed += moved.at(delta).value != v.value;
    }
  }
  EXPECT_GT(unchanged, 0);
  EXPECT_GT(changed, 0);
}

TEST(Interaction, OrderCapEnforced) {
  const Volume vol{Site{0}};
  auto U = std::make_shared<ClusterUniverse>(vol, ClusterGeometry{Neighborhood::single(), {1.0, 2}, 0.0}, 1);
  WeightTable t{U, std::vector<Estimate>(U->size(), Estimate::exact_value(0.1)), {1.0, 2}, 1};
  EXPECT_THROW(interaction_terms(t, 9), ValidationError);
  EXPECT_THROW(interaction_terms(t, 0), ValidationError);
}

TEST(ExpansionIdentity, OneSiteMatchesDensity) {
  const Volume vol{Site{0}};
  const auto pot = PotentialSpec::quadratic();
  const auto drift = markov_tanh_drift({{"A", 1.0}, {"self", 1.0}, {"range", 0}}, 0.3);
  MCParams mc;
  mc.samples = 8000;
  mc.dt = 0.01;
  const WeightEngine e(drift, pot, vol, {1.0, 2}, 3, mc);
  for (auto [x, y] : {std::pair{0.3, -0.2}, std::pair{-0.8, 0.5}}) {
    const auto table = weight_table(e, at(vol, x), at(vol, y), 21);
    const auto r = reconstruct_density(table);
    const auto d = density(drift, pot, vol, at(vol, x), at(vol, y), 2.0, mc, 22);
    EXPECT_LT(std::abs(r.z_against(d.estimate())), 4.0) << r.value << " vs " << d.value;
    const auto it = interaction_terms(table, 6);
    const double lf = -it.total.value;
    EXPECT_NEAR(std::exp(lf), r.value, 1e-3);
  }
}

TEST(ExpansionIdentity, TwoSiteLogIdentity) {
  const Volume vol{Site{0}, Site{1}};
  const auto pot = PotentialSpec::quadratic();
  const auto drift = one_sided_drift(1.0, 0.2);
  MCParams mc;
  mc.samples = 6000;
  mc.dt = 0.01;
  const WeightEngine e(drift, pot, vol, {1.0, 2}, 4, mc);
  EXPECT_EQ(e.universe().edge_count(), 4u);
  auto x = at(vol, 0.2), y = at(vol, -0.4);
  x.set(Site{1}, 0.9);
  const auto table = weight_table(e, x, y, 31);
  const auto it = interaction_terms(table, 5);
  const auto d = density(drift, pot, vol, x, y, 2.0, mc, 32);
  const double lf = -it.total.value;
  const double se = std::hypot(it.total.std_err, d.std_err / d.value);
  EXPECT_LT(std::abs(lf - std::log(d.value)) / se, 4.0) << lf << " vs " << std::log(d.value);
}

TEST(Kp, Endpoints) {
  const auto U = ClusterUniverse(Volume::interval(0, 3), ClusterGeometry{Neighborhood::nearest(), {1.0, 3}, 0.0}, 3);
  const auto r0 = kp_check(0.0, U);
  EXPECT_TRUE(r0.satisfied);
  EXPECT_EQ(r0.worst_ratio, 0.0);
  const auto r1 = kp_check(1.0, U);
  EXPECT_FALSE(r1.satisfied);
  EXPECT_GT(r1.worst_ratio, std::exp(1.0));
  EXPECT_THROW(kp_check(-0.1, U), ValidationError);
}

TEST(Kp, LambdaStarBracketedByClusterCounts) {
  const auto U = ClusterUniverse(Volume::interval(0, 3), ClusterGeometry{Neighborhood::nearest(), {1.0, 3}, 0.0}, 3);
  const auto ls = lambda_star(U, 1e-7);
  EXPECT_GT(ls.lambda, 0.0);
  EXPECT_LT(ls.lambda, std::exp(-1.0));
  EXPECT_TRUE(kp_check(ls.lambda, U).satisfied);
  EXPECT_FALSE(kp_check(ls.lambda + 2 * ls.step, U).satisfied);
  // Counting every cluster as conflicting gives a lower bound.
  std::map<std::size_t, double> count;
  for (std::size_t p = 0; p < U.size(); ++p) ++count[U.polymer_size(p)];
  auto g = [&](double l) {
    double s = 0;
    for (auto [k, n] : count) s += n * k * std::pow(l * std::exp(1.0), k);
    return s;
  };
  double lo = 0, hi = std::exp(-1.0);
  for (int i = 0; i < 60; ++i) (g(0.5 * (lo + hi)) <= 1 ? lo : hi) = 0.5 * (lo + hi);
  EXPECT_GE(ls.lambda, lo);
  // The KP sum for the worst cluster dominates its self term, an upper bound.
  EXPECT_FALSE(kp_check(std::exp(-1.0), U).satisfied);
}

TEST(WeightFit, GridRule) {
  EXPECT_EQ(grid_for_beta(0.4, 0.0, 10.0, 0.01), (TimeGrid{2.5, 4}));
  EXPECT_EQ(grid_for_beta(0.2, 0.0, 10.0, 0.01), (TimeGrid{5.0, 2}));
  EXPECT_EQ(grid_for_beta(0.05, 0.0, 10.0, 0.01), (TimeGrid{10.0, 1}));
  EXPECT_EQ(grid_for_beta(0.0, 0.0, 10.0, 0.01), (TimeGrid{10.0, 1}));
  const auto g = grid_for_beta(2.0, 1.0, 10.0, 0.01);
  EXPECT_GE(g.T, 1.0);
  EXPECT_NEAR(g.T * g.M, 10.0, 1e-12);
}

TEST(WeightFit, ZeroIntensityAndTimeFactor) {
  WeightFitInstance inst{markov_tanh_drift({{"range", 0}, {"self", 1.0}}, 0.0), PotentialSpec::quadratic(),
                         Volume{Site{0}}, at(Volume{Site{0}}, 0.2), at(Volume{Site{0}}, -0.1), 4.0, 2, {}};
  MCParams mc;
  mc.samples = 300;
  mc.dt = 0.02;
  const auto rows = weight_bound_fit({0.0, 0.25, 0.5, 1.0}, inst, mc, 3);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].lambda_hat, 0.0);
  EXPECT_EQ(rows[0].lambda_hi, 0.0);
  EXPECT_EQ(rows[0].c1, 0.0);
  EXPECT_EQ(rows[1].grid, (TimeGrid{4.0, 1}));
  EXPECT_EQ(rows[2].grid, (TimeGrid{2.0, 2}));
  EXPECT_EQ(rows[3].grid, (TimeGrid{1.0, 4}));
  // C2 shrinks as T grows, at the OU rate.
  EXPECT_LT(rows[1].c2, rows[2].c2);
  EXPECT_LT(rows[2].c2, rows[3].c2);
  const auto k = FreeKernel(PotentialSpec::quadratic());
  EXPECT_DOUBLE_EQ(rows[2].c2, kernel_sup_distance(k, 2.0).value);
  for (std::size_t r = 1; r < 4; ++r) EXPECT_GT(rows[r].lambda_hat, 0.0);
}

TEST(Summability, Examples) {
  EXPECT_EQ(summability_report({}).sup, 0.0);
  InteractionTable t;
  t.terms[Volume{Site{3}}] = {5.0, 0.1, 10, false};
  EXPECT_EQ(summability_report({t}).sup, 0.0);
  t.terms[Volume{Site{0}, Site{1}}] = {-0.5, 0.0, 10, false};
  t.terms[Volume{Site{1}, Site{2}, Site{3}}] = {0.25, 0.0, 10, false};
  InteractionTable u;
  u.terms[Volume{Site{0}, Site{1}}] = {0.75, 0.0, 10, false};
  const auto r = summability_report({t, u});
  EXPECT_DOUBLE_EQ(r.per_site.at(Site{0}), 0.75);
  EXPECT_DOUBLE_EQ(r.per_site.at(Site{1}), 0.75 + 2 * 0.25);
  EXPECT_DOUBLE_EQ(r.sup, 1.25);
  EXPECT_EQ(r.worst_site, Site{1});
}

TEST(Probes, IncludeExtremesAndDraws) {
  const Volume vol = Volume::interval(0, 2);
  const auto ps = probe_pairs(PotentialSpec::quadratic(), vol, 3, 1);
  ASSERT_EQ(ps.size(), 5u);
  EXPECT_LT(ps[0].first.at(Site{0}), 0.0);
  EXPECT_GT(ps[1].first.at(Site{0}), 0.0);
  EXPECT_NE(ps[2].first.at(Site{0}), ps[2].first.at(Site{1}));
}
