#pragma once

#include <cstdint>
#include <limits>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "jtsmc/node_set.hpp"

namespace jtsmc {

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// SplitMix64 stream. Cheap to construct, so every (sweep, step, particle)
// gets its own stream and results do not depend on evaluation order.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ull;
    return splitmix64_mix(state_);
  }

  // Independent child stream keyed by up to three coordinates.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    std::uint64_t h = splitmix64_mix(seed ^ 0x6a09e667f3bcc908ull);
    h = splitmix64_mix(h ^ (a + 0x9e3779b97f4a7c15ull));
    h = splitmix64_mix(h ^ (b + 0xbb67ae8584caa73bull));
    h = splitmix64_mix(h ^ (c + 0x3c6ef372fe94f82bull));
    return Rng(h);
  }

  double uniform() { return boost::random::uniform_01<double>()(*this); }

  // Uniform integer in [0, n).
  int below(int n) { return boost::random::uniform_int_distribution<int>(0, n - 1)(*this); }

  std::uint64_t below64(std::uint64_t n) {
    return boost::random::uniform_int_distribution<std::uint64_t>(0, n - 1)(*this);
  }

  bool bernoulli(double prob) { return boost::random::bernoulli_distribution<double>(prob)(*this); }

  // Uniform subset of s (empty set allowed).
  NodeSet subset(NodeSet s) {
    if (s.empty()) return s;
    const int k = s.size();
    const std::uint64_t draw = k == 64 ? (*this)() : below64(std::uint64_t{1} << k);
    return s.scatter(draw);
  }

  // Uniform non-empty subset of a non-empty s.
  NodeSet nonempty_subset(NodeSet s) {
    const int k = s.size();
    const std::uint64_t top = k == 64 ? max() : (std::uint64_t{1} << k) - 1;
    return s.scatter(1 + below64(top));
  }

private:
  std::uint64_t state_;
};

}  // namespace jtsmc
