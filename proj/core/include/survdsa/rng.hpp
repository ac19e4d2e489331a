#ifndef SURVDSA_RNG_HPP_
#define SURVDSA_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

namespace survdsa {

// splitmix64: tiny, fast, and identical on every platform, which keeps
// simulation output byte-stable across compilers and thread counts.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from (seed, stream id).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0x2545f4914f6cdd1dULL * (stream + 1)));
  g.next();
  return g.next();
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_.next(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform01_open() { return 1.0 - uniform01(); }

  std::uint64_t below(std::uint64_t n) { return gen_.next() % n; }

  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double exponential(double mean) { return -mean * std::log(uniform01_open()); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  SplitMix64 gen_;
};

}  // namespace survdsa

#endif  // SURVDSA_RNG_HPP_
