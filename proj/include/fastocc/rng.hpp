#ifndef FASTOCC_RNG_HPP
#define FASTOCC_RNG_HPP

#include <cstdint>
#include <random>

namespace fastocc {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Seed for an independent substream identified by (seed, iteration, tag, lane).
// Parallel sweeps split their index range into fixed-size lanes and give each
// lane its own generator, so results do not depend on the thread count.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t iteration,
                                    std::uint64_t tag, std::uint64_t lane) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ iteration);
  h = detail::splitmix64(h ^ (tag << 32));
  h = detail::splitmix64(h ^ lane);
  return h;
}

inline Rng make_substream(std::uint64_t seed, std::uint64_t iteration,
                          std::uint64_t tag, std::uint64_t lane) {
  return Rng(substream_seed(seed, iteration, tag, lane));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double std_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double exponential1(Rng& rng) {
  return std::exponential_distribution<double>(1.0)(rng);
}

// Inverse-gamma with shape/scale parameterisation: 1 / Gamma(shape, rate = scale).
inline double inverse_gamma(Rng& rng, double shape, double scale) {
  const double g = std::gamma_distribution<double>(shape, 1.0)(rng);
  return scale / g;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace fastocc

#endif  // FASTOCC_RNG_HPP
