#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gibbsprop/drift.hpp"
#include "gibbsprop/error.hpp"
#include "gibbsprop/lattice.hpp"
#include "gibbsprop/parallel.hpp"
#include "gibbsprop/path.hpp"
#include "gibbsprop/potential.hpp"
#include "gibbsprop/rng.hpp"

namespace gibbsprop {

// Euler-Maruyama for dX_i = dB_i + (-U'(X_i)/2 + beta b_i(t, X)) dt on the
// interior of vol; sites of the boundary layer follow the free dynamics.
// Noise is drawn step by step in site order from `rng`.
inline PathBundle simulate_with(const DriftSpec& drift, const PotentialSpec& pot, const Volume& vol,
                                const Configuration& x0, double t, double dt, Rng& rng) {
  require(dt > 0 && t >= 0, "simulate: need dt > 0 and t >= 0");
  if (drift.memory > 0 && dt > drift.memory + 1e-12) throw ValidationError("simulate: dt must not exceed the memory t0");
  const long K = steps_for(t, dt, "simulate horizon");
  PathBundle path(vol, dt, static_cast<std::size_t>(K), 0, pot.space);
  for (std::size_t s = 0; s < vol.size(); ++s) path.value(s, 0) = x0.at(vol[s]);

  const Volume inner = interior(vol, drift.nbhd);
  const bool interacting = drift.beta != 0.0 && !inner.empty();
  DriftLayout layout;
  if (interacting) layout = DriftLayout(vol, inner, drift.nbhd);
  const long lag = drift.memory_steps(dt);
  const double sq = std::sqrt(dt);
  std::vector<double> push(vol.size());

  for (long k = 0; k < K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    for (std::size_t s = 0; s < vol.size(); ++s) push[s] = -0.5 * pot.dU(path.value(s, kk));
    if (interacting)
      for (std::size_t c = 0; c < layout.centers.size(); ++c) {
        PathView v(path, drift.nbhd, layout.rows_of(c), layout.centers[c], k, lag, drift.history);
        push[layout.center_rows[c]] += drift.beta * drift.evaluate(v);
      }
    for (std::size_t s = 0; s < vol.size(); ++s) {
      const double next = path.value(s, kk) + push[s] * dt + sq * rng.normal();
      if (!std::isfinite(next)) throw NumericalError("simulate: non-finite state at step " + std::to_string(k));
      path.value(s, kk + 1) = next;
    }
  }
  path.compute_increments(pot);
  return path;
}

inline PathBundle simulate(const DriftSpec& drift, const PotentialSpec& pot, const Volume& vol,
                           const Configuration& x0, double t, double dt, std::uint64_t seed) {
  Rng rng(seed, "simulate", 0);
  return simulate_with(drift, pot, vol, x0, t, dt, rng);
}

// Replica r uses the stream ("simulate", r) of the master seed, so
// simulate_replicas(...)[0] equals simulate(...) for the same seed.
inline std::vector<PathBundle> simulate_replicas(const DriftSpec& drift, const PotentialSpec& pot,
                                                 const Volume& vol, const Configuration& x0, double t, double dt,
                                                 std::uint64_t seed, std::size_t n, unsigned threads = 1) {
  std::vector<PathBundle> out(n);
  parallel_for(n, threads, [&](std::size_t r) {
    Rng rng(seed, "simulate", r);
    out[r] = simulate_with(drift, pot, vol, x0, t, dt, rng);
  });
  return out;
}

}  // namespace gibbsprop
