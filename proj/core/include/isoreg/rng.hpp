#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace isoreg {

/// Deterministic random stream keyed by (seed, stream_id).
///
/// The engine is std::mt19937_64 seeded from a SplitMix64 expansion of the
/// key, so distinct stream ids give statistically independent streams and
/// replicate r of any Monte Carlo loop can be regenerated in isolation.
/// Uniforms use the top 53 bits of each draw; normals use the Box-Muller
/// transform with both outputs consumed in order. None of this depends on
/// implementation-defined std:: distributions, so a (seed, stream_id) pair
/// yields the same numbers on every conforming toolchain.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low();
  double normal();
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }

  void fill_normal(std::span<double> out);
  std::vector<double> normals(std::size_t count);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace isoreg
