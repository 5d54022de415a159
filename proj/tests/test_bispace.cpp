#include <gtest/gtest.h>

#include <cmath>

#include "gibbsprop/bispace.hpp"

using namespace gibbsprop;

namespace {

BiSpaceInteraction make_bsi(Interaction phi, std::shared_ptr<const DynamicInteraction> dyn, double t,
                            const PotentialSpec& pot = PotentialSpec::quadratic()) {
  BiSpaceInteraction b;
  b.initial = std::move(phi);
  if (dyn) b.dynamic = std::move(dyn);
  b.kernel = std::make_shared<const FreeKernel>(pot);
  b.t = t;
  return b;
}

// Trapezoid nodes and m-weights for m = N(0, 1/2).
struct Grid {
  std::vector<double> x, w;
  explicit Grid(int n) {
    const double s = std::sqrt(0.5), lo = -6 * s, h = 12 * s / (n - 1);
    for (int k = 0; k < n; ++k) {
      const double v = lo + h * k;
      x.push_back(v);
      w.push_back((k == 0 || k == n - 1 ? 0.5 : 1.0) * h * std::exp(-v * v) / std::sqrt(std::numbers::pi));
    }
  }
};

}  // namespace

TEST(BiSpaceHamiltonian, ReducesToKernelTerm) {
  const Volume W = Volume::interval(0, 2);
  const auto b = make_bsi(Interaction({}, 1.0), nullptr, 0.8);
  const Configuration x(W, {0.1, -0.4, 0.9}), y(W, {0.3, 0.2, -0.5});
  double expect = 0.0;
  for (std::size_t k = 0; k < 3; ++k) expect -= std::log(b.kernel->density(0.8, x[k], y[k]));
  EXPECT_NEAR(bispace_hamiltonian(b, W, Volume{}, x, y), expect, 1e-12);
  EXPECT_NEAR(bispace_hamiltonian(b, Volume{Site{0}}, Volume{Site{1}, Site{2}}, x, y), expect, 1e-12);
  EXPECT_EQ(bispace_hamiltonian(b, Volume{}, Volume{}, x, y), 0.0);
  const auto late = make_bsi(Interaction({}, 1.0), nullptr, 30.0);
  EXPECT_NEAR(bispace_hamiltonian(late, W, Volume{}, x, y), 0.0, 1e-9);
}

TEST(BiSpaceHamiltonian, AssemblesAllThreeParts) {
  const Volume W = Volume::interval(0, 2);
  const Interaction phi(nearest_neighbor_pairs(W, "pair_tanh", 0.7), 0.5);
  auto dyn = std::make_shared<FunctionalDynamicInteraction>(std::vector<FunctionalDynamicInteraction::Entry>{
      {Volume{Site{0}, Site{1}}, [](auto x, auto y) { return 0.3 * std::tanh(x[0]) * std::tanh(y[1]); }},
      {Volume{Site{2}}, [](auto x, auto y) { return 0.2 * std::tanh(x[0] * y[0]); }}});
  const auto b = make_bsi(phi, dyn, 1.0);
  const Configuration x(W, {0.1, -0.4, 0.9}), y(W, {0.3, 0.2, -0.5});
  const Volume d{Site{0}};
  const double expect = 0.5 * 0.7 * std::tanh(0.1) * std::tanh(-0.4) - std::log(b.kernel->density(1.0, 0.1, 0.3)) +
                        0.3 * std::tanh(0.1) * std::tanh(0.2);
  EXPECT_NEAR(bispace_hamiltonian(b, d, Volume{}, x, y), expect, 1e-12);
}

TEST(ConditionalDensity, FreeCaseIsOne) {
  const Volume W = Volume::interval(-1, 1), lam{Site{0}};
  const auto b = make_bsi(Interaction({}, 1.0), nullptr, 0.5);
  const Configuration y_out(Volume{Site{-1}, Site{1}}, {0.4, -1.0});
  ConditionalParams cp;
  cp.chains = 40;
  for (double zv : {-1.0, 0.0, 0.6}) {
    const auto g = conditional_density(b, W, lam, Configuration(lam, {zv}), y_out, cp, 3);
    EXPECT_LT(std::abs(g.z_against(1.0)), 4.0) << zv << " " << g.value << " " << g.std_err;
  }
}

TEST(ConditionalDensity, NoCouplingMeansNoBoundaryDependence) {
  const Volume W = Volume::interval(-1, 1), lam{Site{0}};
  const auto b = make_bsi(Interaction({}, 1.0), nullptr, 0.5);
  ConditionalParams cp;
  const Configuration z(lam, {0.3});
  const auto g1 = conditional_density(b, W, lam, z, Configuration(Volume{Site{-1}, Site{1}}, {0.4, -1.0}), cp, 5);
  const auto g2 = conditional_density(b, W, lam, z, Configuration(Volume{Site{-1}, Site{1}}, {-2.0, 1.5}), cp, 5);
  EXPECT_EQ(g1.value, g2.value);
}

TEST(ConditionalDensity, DecouplingMatchesQuadrature) {
  // Two sites, Lambda = {0}. Phi_{01} meets Lambda, Phi_{1} misses it.
  const Volume W{Site{0}, Site{1}}, lam{Site{0}};
  const double beta0 = 0.5, J = 1.0, c = 0.8, d = 0.9, t = 0.7, y1 = 0.6;
  auto dyn = std::make_shared<FunctionalDynamicInteraction>(std::vector<FunctionalDynamicInteraction::Entry>{
      {Volume{Site{0}, Site{1}}, [c](auto x, auto y) { return c * std::tanh(x[1]) * std::tanh(y[0]); }},
      {Volume{Site{1}}, [d](auto x, auto y) { return d * std::tanh(x[0]) * std::tanh(y[0]); }}});
  const auto b = make_bsi(Interaction({pair_tanh(Site{0}, Site{1}, J)}, beta0), dyn, t);
  const auto& k = *b.kernel;
  auto joint = [&](double x0, double x1, double z, double sign) {
    const double H = beta0 * J * std::tanh(x0) * std::tanh(x1) - std::log(k.density(t, x0, z)) -
                     std::log(k.density(t, x1, y1)) + c * std::tanh(x1) * std::tanh(z) +
                     sign * d * std::tanh(x1) * std::tanh(y1);
    return std::exp(-H);
  };
  const Grid G(121);
  auto g_quad = [&](double z, double sign) {
    auto inner = [&](double zz) {
      double s = 0;
      for (std::size_t a = 0; a < G.x.size(); ++a)
        for (std::size_t bb = 0; bb < G.x.size(); ++bb) s += G.w[a] * G.w[bb] * joint(G.x[a], G.x[bb], zz, sign);
      return s;
    };
    double norm = 0;
    for (std::size_t a = 0; a < G.x.size(); ++a) norm += G.w[a] * inner(G.x[a]);
    return inner(z) / norm;
  };
  ConditionalParams cp;
  cp.chains = 64;
  cp.draws = 40;
  const Configuration y_out(Volume{Site{1}}, {y1});
  for (double z : {-0.7, 0.5}) {
    const double right = g_quad(z, +1.0), wrong = g_quad(z, -1.0);
    const auto g = conditional_density(b, W, lam, Configuration(lam, {z}), y_out, cp, 13);
    EXPECT_LT(std::abs(g.z_against(right)), 4.0) << z << ": " << g.value << " vs " << right;
    // The opposite sign on the non-meeting term is distinguishable at this precision.
    EXPECT_GT(std::abs(right - wrong), 4 * g.std_err) << right << " " << wrong << " " << g.std_err;
  }
}

TEST(ConditionalDensity, BoundedAwayFromZero) {
  const Volume W = Volume::interval(-2, 2), lam{Site{0}};
  const auto b = make_bsi(Interaction(nearest_neighbor_pairs(W, "pair_tanh", 1.0), 0.4), nullptr, 1.0);
  const Configuration y_out(W.minus(lam), {0.5, -0.3, 0.8, 0.1});
  ConditionalParams cp;
  double lo = 1e9, hi = 0;
  for (double z : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
    const auto g = conditional_density(b, W, lam, Configuration(lam, {z}), y_out, cp, 2);
    lo = std::min(lo, g.value);
    hi = std::max(hi, g.value);
  }
  EXPECT_GT(lo, 0.05);
  EXPECT_LT(hi, 20.0);
}

TEST(ExpansionInteraction, DeterministicAndMeasurable) {
  const Volume W = Volume::interval(-2, 2);
  MCParams mc;
  mc.samples = 16;
  mc.dt = 0.05;
  auto engine = std::make_shared<const WeightEngine>(markov_tanh_drift({{"A", 1.0}}, 0.4), PotentialSpec::quadratic(),
                                                     W, TimeGrid{1.0, 1}, 1, mc);
  const ExpansionDynamicInteraction dyn(engine, 2, 7);
  EXPECT_EQ(engine->universe().size(), 3u);
  Configuration x(W, {0.1, 0.2, -0.3, 0.4, 0.0}), y(W, {-0.2, 0.5, 0.1, 0.0, 0.3});
  auto all = [](const Volume&) { return true; };
  const double s = dyn.sum(x, y, all);
  EXPECT_EQ(s, dyn.sum(x, y, all));
  // Terms not containing site 2 do not move when x_2 and y_2 move.
  auto no2 = [](const Volume& A) { return !A.contains(Site{2}); };
  const double before = dyn.sum(x, y, no2);
  x.set(Site{2}, 1.7);
  y.set(Site{2}, -1.1);
  EXPECT_EQ(dyn.sum(x, y, no2), before);
  EXPECT_NE(dyn.sum(x, y, all), s);
  // The table built directly agrees with the on-demand evaluation.
  const auto it = interaction_terms(weight_table(*engine, x, y, 7), 2);
  EXPECT_NEAR(dyn.sum(x, y, all), it.total.value, 1e-12);
}

TEST(ExpansionInteraction, FullConditionalInY) {
  // One site: exp(-H(x, .)) is proportional to p_t(x, .) exp(-Phi(x, .)).
  const Volume W{Site{0}};
  MCParams mc;
  mc.samples = 16;
  mc.dt = 0.05;
  auto engine = std::make_shared<const WeightEngine>(markov_tanh_drift({{"self", 1.0}, {"range", 0}}, 0.4),
                                                     PotentialSpec::quadratic(), W, TimeGrid{0.5, 2}, 2, mc);
  auto dyn = std::make_shared<const ExpansionDynamicInteraction>(engine, 3, 1);
  const auto b = make_bsi(Interaction({site_tanh(Site{0}, 1.0)}, 0.3), dyn, 1.0);
  const Configuration x(W, {0.4});
  double ref = 0;
  for (double yv : {-1.0, -0.2, 0.5, 1.3}) {
    const Configuration y(W, {yv});
    const double lhs = -bispace_hamiltonian(b, W, Volume{}, x, y);
    const double rhs = b.log_kernel(0.4, yv) - dyn->sum(x, y, [](const Volume&) { return true; });
    if (yv == -1.0) ref = lhs - rhs;
    EXPECT_NEAR(lhs - rhs, ref, 1e-12);
  }
}

TEST(Quasilocality, FiniteRangeCurve) {
  const Volume W = Volume::interval(-3, 3), lam{Site{0}};
  const auto b = make_bsi(Interaction(nearest_neighbor_pairs(W, "pair_tanh", 1.0), 0.6), nullptr, 0.5);
  const Volume out = W.minus(lam);
  Configuration y(out, {0.2, -0.1, 0.4, 0.3, -0.2, 0.1});
  std::vector<Configuration> variants{Configuration(out, {1.5, 1.5, 1.5, 1.5, 1.5, 1.5}),
                                      Configuration(out, {-1.5, -1.5, -1.5, -1.5, -1.5, -1.5})};
  const std::vector<Volume> deltas{Volume{}, Volume{Site{-1}, Site{1}}, Volume{Site{-2}, Site{-1}, Site{1}, Site{2}},
                                   out};
  ConditionalParams cp;
  cp.chains = 32;
  const auto curve = quasilocality_probe(b, W, lam, Configuration(lam, {0.3}), y, variants, deltas, cp, 4);
  ASSERT_EQ(curve.points.size(), 4u);
  EXPECT_TRUE(curve.non_increasing);
  EXPECT_GT(curve.points[0].max_z, 4.0);  // a real boundary effect with nothing fixed
  EXPECT_EQ(curve.points[3].variation, 0.0);
  EXPECT_LT(curve.points[2].max_z, 4.0);
  EXPECT_THROW(quasilocality_probe(b, W, lam, Configuration(lam, {0.3}), y, variants, {out, Volume{}}, cp, 4),
               ValidationError);
}
