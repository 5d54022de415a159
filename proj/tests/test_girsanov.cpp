#include <gtest/gtest.h>

#include <cmath>

#include "gibbsprop/girsanov.hpp"

using namespace gibbsprop;

namespace {

double gauss(double y, double m, double v) { return std::exp(-(y - m) * (y - m) / (2 * v)) / std::sqrt(kTwoPi * v); }

// Ratio of the transition density of dX = (c b - a X) dt + dB to that of the OU.
double shifted_ou_ratio(double a, double cb, double t, double x, double y) {
  const double e = std::exp(-a * t), v = (1 - e * e) / (2 * a), mu = cb / a;
  return gauss(y, mu + (x - mu) * e, v) / gauss(y, x * e, v);
}

}  // namespace

TEST(Psi, ZeroAtZeroIntensity) {
  const Volume vol = Volume::interval(0, 2);
  const auto p = simulate(markov_tanh_drift({}, 0.0), PotentialSpec::quadratic(), vol, Configuration::constant(vol, 0.1), 1.0, 0.01, 1);
  EXPECT_EQ(psi(markov_tanh_drift({}, 0.0), Site{1}, 0.0, 1.0, p), 0.0);
}

TEST(Psi, SetsNotOfNeighborhoodFormContributeZero) {
  const Volume vol = Volume::interval(0, 3);
  const auto d = markov_tanh_drift({}, 0.5);
  const auto p = simulate(d, PotentialSpec::quadratic(), vol, Configuration::constant(vol, 0.1), 1.0, 0.01, 1);
  EXPECT_EQ(psi_set(d, Volume{Site{0}, Site{2}}, 0.0, 1.0, p), 0.0);
  EXPECT_EQ(psi_set(d, Volume{Site{1}}, 0.0, 1.0, p), 0.0);
  EXPECT_NE(psi_set(d, Volume::interval(0, 2), 0.0, 1.0, p), 0.0);
  EXPECT_EQ(psi_set(d, Volume::interval(0, 2), 0.0, 1.0, p), psi(d, Site{1}, 0.0, 1.0, p));
}

TEST(Psi, ConstantDriftAnalyticForm) {
  const auto pot = PotentialSpec::quadratic(1.0);
  const Volume vol{Site{0}};
  const double c = 0.8, beta = 0.3;
  const auto d = constant_drift(c, beta);
  const auto p = simulate(d, pot, vol, Configuration::constant(vol, 0.4), 2.0, 0.01, 5);
  // B-bar(b) - B-bar(a) on [0.5, 1.5].
  double bbar = 0;
  for (long l = 50; l < 150; ++l) bbar += p.increment_at_step(0, l);
  EXPECT_NEAR(psi(d, Site{0}, 0.5, 1.5, p), -beta * c * bbar + beta * beta * c * c * 1.0 / 2, 1e-12);
}

TEST(Psi, MissingHistoryIsACoverageError) {
  const auto d = delayed_feedback_drift({{"alpha", 1.0}, {"t0", 0.5}}, 0.5);
  PathBundle p(Volume{Site{0}}, 0.1, 10, 10);
  p.compute_increments(PotentialSpec::quadratic());
  EXPECT_THROW(psi(d, Site{0}, 1.0, 2.0, p), CoverageError);
  EXPECT_THROW(psi(d, Site{1}, 1.5, 2.0, p), CoverageError);
}

TEST(Girsanov, ZeroIntensityGivesUnitWeight) {
  const Volume vol = Volume::interval(0, 2);
  const auto d = markov_tanh_drift({}, 0.0);
  const auto p = simulate(d, PotentialSpec::quadratic(), vol, Configuration::constant(vol, 0.0), 1.0, 0.01, 2);
  EXPECT_EQ(log_girsanov_weight(d, PotentialSpec::quadratic(), vol, 0.0, 1.0, p), 0.0);
}

TEST(Girsanov, AssemblyIdentityOnStoredPaths) {
  const auto pot = PotentialSpec::quadratic(1.0);
  const auto d = markov_tanh_drift({{"A", 1.0}, {"self", 0.5}}, 0.2);
  for (int n = 1; n <= 3; ++n) {
    const Volume vol = Volume::interval(0, n - 1);
    const auto paths = simulate_replicas(d.with_beta(0.0), pot, vol, Configuration::constant(vol, 0.3), 1.0, 0.01, 8, 40);
    for (const auto& p : paths) {
      const double lm = log_girsanov_weight(d, pot, vol, 0.0, 1.0, p);
      const double sp = total_psi(d, vol, 0.0, 1.0, p);
      EXPECT_NEAR(std::exp(-sp), std::exp(lm), 1e-12 * std::exp(lm));
    }
  }
}

TEST(Girsanov, ConstantDriftPlugIn) {
  const auto pot = PotentialSpec::quadratic(1.0);
  const Volume vol{Site{0}};
  const double c = -0.6, beta = 0.25;
  const auto p = simulate(constant_drift(0, 0), pot, vol, Configuration::constant(vol, 0.2), 1.0, 0.01, 3);
  double bbar = 0;
  for (std::size_t k = 0; k < p.steps(); ++k) bbar += p.increment(0, k);
  EXPECT_NEAR(log_girsanov_weight(constant_drift(c, beta), pot, vol, 0.0, 1.0, p), beta * c * bbar - beta * beta * c * c / 2,
              1e-12);
}

TEST(Girsanov, MartingaleMeanIsOne) {
  const auto pot = PotentialSpec::quadratic(1.0);
  const Volume vol{Site{0}};
  const auto d = markov_tanh_drift({{"A", 1.0}, {"self", 1.0}, {"range", 0}}, 0.3);
  const auto paths = simulate_replicas(d.with_beta(0.0), pot, vol, Configuration::constant(vol, 0.5), 1.0, 0.02, 11, 20000);
  MeanAccumulator m;
  for (const auto& p : paths) m.add(std::exp(log_girsanov_weight(d, pot, vol, 0.0, 1.0, p)));
  EXPECT_LT(std::abs(m.mean() - 1.0) / m.std_err(), 4.0);
}

TEST(BridgeExpectation, ConstantFunctionalIsExactlyOne) {
  MCParams mc;
  mc.samples = 200;
  mc.dt = 0.05;
  const Volume vol{Site{0}};
  const auto e = bridge_expectation([](const PathBundle&) { return 1.0; }, PotentialSpec::quadratic(), vol,
                                    Configuration::constant(vol, 0.2), Configuration::constant(vol, -1.0), 1.0, mc, 1);
  EXPECT_EQ(e.value, 1.0);
}

TEST(BridgeExpectation, TerminalValueIsPinned) {
  MCParams mc;
  mc.samples = 100;
  mc.dt = 0.05;
  const Volume vol{Site{0}};
  const auto e = bridge_expectation([](const PathBundle& p) { return p.value(0, p.steps()); }, PotentialSpec::quadratic(),
                                    vol, Configuration::constant(vol, 0.2), Configuration::constant(vol, -1.0), 1.0, mc, 1);
  EXPECT_NEAR(e.value, -1.0, 1e-12);
}

TEST(BridgeExpectation, OuMidpointMatchesGaussianConditioning) {
  MCParams mc;
  mc.samples = 40000;
  mc.dt = 0.02;
  const double a = 1.0, x = 0.8, y = -0.6, t = 2.0, s = 1.0;
  const Volume vol{Site{0}};
  const auto e = bridge_expectation([](const PathBundle& p) { return p.value(0, 50); }, PotentialSpec::quadratic(a), vol,
                                    Configuration::constant(vol, x), Configuration::constant(vol, y), t, mc, 2);
  // (X_s, X_t) given X_0 = x is bivariate normal.
  const double vs = (1 - std::exp(-2 * a * s)) / (2 * a), vt = (1 - std::exp(-2 * a * t)) / (2 * a);
  const double cov = std::exp(-a * (t - s)) * vs;
  const double oracle = x * std::exp(-a * s) + cov / vt * (y - x * std::exp(-a * t));
  EXPECT_LT(std::abs(e.value - oracle) / e.std_err, 4.0);
}

TEST(BridgeExpectation, OuBridgeVarianceMatches) {
  MCParams mc;
  mc.samples = 40000;
  mc.dt = 0.05;
  const double a = 1.0, t = 2.0, s = 0.5;
  const Volume vol{Site{0}};
  const auto e = bridge_expectation([](const PathBundle& p) { return p.value(0, 10) * p.value(0, 10); },
                                    PotentialSpec::quadratic(a), vol, Configuration::constant(vol, 0.0),
                                    Configuration::constant(vol, 0.0), t, mc, 3);
  const double vs = (1 - std::exp(-2 * a * s)) / (2 * a), vt = (1 - std::exp(-2 * a * t)) / (2 * a);
  const double cov = std::exp(-a * (t - s)) * vs;
  EXPECT_LT(std::abs(e.value - (vs - cov * cov / vt)) / e.std_err, 4.0);
}

TEST(Density, ZeroIntensityIsOne) {
  MCParams mc;
  mc.samples = 100;
  mc.dt = 0.05;
  const Volume vol = Volume::interval(0, 2);
  const auto d = density(markov_tanh_drift({}, 0.0), PotentialSpec::quadratic(), vol, Configuration::constant(vol, 0.1),
                         Configuration::constant(vol, -0.3), 1.0, mc, 1);
  EXPECT_DOUBLE_EQ(d.value, 1.0);
}

TEST(Density, ConstantDriftMatchesGaussianRatio) {
  MCParams mc;
  mc.samples = 20000;
  mc.dt = 0.005;
  const double a = 1.0, c = 1.0, beta = 0.3, t = 1.0;
  const Volume vol{Site{0}};
  for (auto [x, y] : {std::pair{0.0, 0.0}, std::pair{0.5, -0.5}, std::pair{-1.0, 0.8}}) {
    const auto d = density(constant_drift(c, beta), PotentialSpec::quadratic(a), vol, Configuration::constant(vol, x),
                           Configuration::constant(vol, y), t, mc, 7);
    EXPECT_LT(std::abs(d.value - shifted_ou_ratio(a, beta * c, t, x, y)) / d.std_err, 4.0) << x << "," << y;
  }
}

TEST(Density, NormalizesAgainstFreeKernel) {
  MCParams mc;
  mc.samples = 400;
  mc.dt = 0.02;
  const auto pot = PotentialSpec::quadratic(1.0);
  const Volume vol{Site{0}};
  const auto drift = markov_tanh_drift({{"A", 1.0}, {"self", 1.0}, {"range", 0}}, 0.4);
  const double x = 0.3, t = 1.0;
  BridgeEngine eng(pot, mc);
  // Gauss-Hermite-like rule: trapezoid over the y grid against the OU law of X_t.
  double integral = 0, h = 0.1;
  for (double y = -4.0; y <= 4.0 + 1e-9; y += h) {
    const auto f = eng.density(drift, vol, Configuration::constant(vol, x), Configuration::constant(vol, y), t, 99);
    integral += h * f.value * eng.kernel().density(t, x, y) * eng.kernel().measure().density(y);
  }
  EXPECT_NEAR(integral, 1.0, 0.02);
}

TEST(Density, BridgeAndEndpointMethodsAgree) {
  MCParams mc;
  mc.samples = 20000;
  mc.dt = 0.01;
  const auto pot = PotentialSpec::quadratic(1.0);
  const Volume vol = Volume::interval(0, 1);
  const auto drift = markov_tanh_drift({{"A", 1.0}, {"self", 1.0}, {"range", 0}}, 0.6);
  const auto x = Configuration(vol, {0.2, -0.4}), y = Configuration(vol, {0.5, 0.1});
  BridgeEngine eng(pot, mc);
  const auto a = eng.density(drift, vol, x, y, 1.0, 1);
  const auto b = eng.density_endpoint_ratio(drift, vol, x, y, 1.0, 2);
  EXPECT_LT(std::abs(a.value - b.value) / std::hypot(a.std_err, b.std_err), 4.0);
  EXPECT_EQ(b.method, "endpoint-ratio");
}

TEST(Density, GeneralPotentialMethodsAgree) {
  MCParams mc;
  mc.samples = 20000;
  mc.dt = 0.01;
  mc.bandwidth_scale = 0.5;
  const auto pot = PotentialSpec::double_well();
  const Volume vol{Site{0}};
  const auto drift = constant_drift(1.0, 0.4);
  const auto x = Configuration::constant(vol, -0.5), y = Configuration::constant(vol, 0.6);
  BridgeEngine eng(pot, mc);
  const auto a = eng.density(drift, vol, x, y, 1.0, 1);
  const auto b = eng.density_endpoint_ratio(drift, vol, x, y, 1.0, 2);
  EXPECT_EQ(a.method, "bridge-MC");
  EXPECT_GT(a.ess, 100.0);
  EXPECT_LT(std::abs(a.value - b.value), 4.0 * std::hypot(a.std_err, b.std_err) + 0.03 * b.value);
}

TEST(Density, SeedsAgreeStatistically) {
  MCParams mc;
  mc.samples = 4000;
  mc.dt = 0.02;
  const Volume vol = Volume::interval(0, 2);
  const auto drift = markov_tanh_drift({{"A", 1.0}}, 0.5);
  BridgeEngine eng(PotentialSpec::quadratic(), mc);
  const auto x = Configuration::constant(vol, 0.3), y = Configuration::constant(vol, -0.2);
  const auto a = eng.density(drift, vol, x, y, 1.0, 1), b = eng.density(drift, vol, x, y, 1.0, 2);
  EXPECT_NE(a.value, b.value);
  EXPECT_LT(std::abs(a.value - b.value) / std::hypot(a.std_err, b.std_err), 4.0);
}
