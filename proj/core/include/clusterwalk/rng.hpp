#pragma once

#include <cmath>
#include <cstdint>

namespace clusterwalk {

// Counter-based 64-bit generator built on the splitmix64 finalizer.  Every
// draw is a pure function of (key, counter), so replaying a stream from any
// point is trivial and nothing depends on call order across streams.
//
// Stream-splitting convention used throughout the project:
//   stream 0  environment site field (one per environment)
//   stream 1  walkers (one child per replica)
//   stream 2  continuization clocks
//   stream 3  experiment drivers (instance selection, sub-seeds)
// Independent substreams come from child(i); margin escalation resamples an
// environment from child(attempt) of its site stream.

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_key(seed, stream)) {}

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed + kGoldenGamma) ^ mix64(stream * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull));
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGoldenGamma); }

  // Uniform in [0, 1), 53 significant bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exponential(1); next_unit() < 1 keeps the log argument positive.
  double next_exp() { return -std::log1p(-next_unit()); }

  std::uint64_t counter() const { return counter_; }
  std::uint64_t key() const { return key_; }

  CounterRng child(std::uint64_t index) const {
    CounterRng c(0, 0);
    c.key_ = mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ull));
    c.counter_ = 0;
    return c;
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stateless per-site draw: the Bernoulli field underlying an environment.
// h starts from the environment key and folds in one word per coordinate.
inline std::uint64_t site_mix(std::uint64_t env_key, const std::int32_t* coords, int dim) {
  std::uint64_t h = env_key;
  for (int a = 0; a < dim; ++a) {
    h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(coords[a])) + kGoldenGamma * static_cast<std::uint64_t>(a + 1)));
  }
  return h;
}

inline double site_unit(std::uint64_t env_key, const std::int32_t* coords, int dim) {
  return static_cast<double>(site_mix(env_key, coords, dim) >> 11) * 0x1.0p-53;
}

}
