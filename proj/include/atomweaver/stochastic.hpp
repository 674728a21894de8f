#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>

#include "atomweaver/lattice.hpp"

namespace atomweaver {

/// Per-trial random stream. The same (seed, stream) pair always yields the same draws;
/// uniforms are built from raw engine output so results do not depend on the
/// standard library's distribution implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x61746f6du};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

struct LoadingModel {
  double p_load = 0.6;

  void validate() const {
    if (!(p_load >= 0.0 && p_load <= 1.0)) throw std::invalid_argument("p_load must lie in [0, 1]");
  }
};

/// Exponential vacuum loss with lifetime tau (may be +inf) plus an optional
/// transport penalty of beta_move per meter travelled.
struct LossModel {
  double tau = 6.2;
  double beta_move = 0.0;

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (!(beta_move >= 0.0) || !std::isfinite(beta_move))
      throw std::invalid_argument("beta_move must be non-negative");
  }
};

inline Occupancy load(const TrapLattice& lattice, const LoadingModel& model, RngStream& rng) {
  model.validate();
  Occupancy occ = Occupancy::empty_like(lattice);
  for (std::size_t i = 0; i < occ.size(); ++i) occ.set(i, rng.bernoulli(model.p_load));
  return occ;
}

inline double survival_probability(const LossModel& model, double dt, double distance_m) {
  if (dt < 0.0 || distance_m < 0.0) throw std::invalid_argument("dt and distance must be >= 0");
  const double vacuum = std::exp(-dt / model.tau);
  const double transport = std::max(0.0, 1.0 - model.beta_move * distance_m);
  return std::clamp(vacuum * transport, 0.0, 1.0);
}

/// One Bernoulli survival draw per occupied site, in site order. `distance_per_site`
/// is either empty (no transport) or holds the distance travelled by the atom now at
/// each site.
inline Occupancy apply_loss(const Occupancy& occ, const LossModel& model, double dt,
                            std::span<const double> distance_per_site, RngStream& rng) {
  if (dt < 0.0) throw std::invalid_argument("dt must be >= 0");
  if (!distance_per_site.empty() && distance_per_site.size() != occ.size())
    throw std::invalid_argument("distance_per_site must match occupancy size");
  Occupancy out = occ;
  const double static_survival = survival_probability(model, dt, 0.0);
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (!occ[i]) continue;
    const double s = distance_per_site.empty()
                         ? static_survival
                         : survival_probability(model, dt, distance_per_site[i]);
    if (!rng.bernoulli(s)) out.set(i, false);
  }
  return out;
}

inline Occupancy apply_loss(const Occupancy& occ, const LossModel& model, double dt,
                            RngStream& rng) {
  return apply_loss(occ, model, dt, {}, rng);
}

}  // namespace atomweaver
