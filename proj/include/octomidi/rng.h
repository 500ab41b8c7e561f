#ifndef OCTOMIDI_RNG_H_
#define OCTOMIDI_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace octomidi {

// Seeded random stream with platform-independent output.
//
// Every draw the library makes goes through the helpers below, never through
// <random> distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t uniform(uint64_t n);

  // Uniform integer in [lo, hi], inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(uniform(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform_real() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Poisson(mean) by multiplication of uniforms; fine for the small means
  // used for span lengths.
  int poisson(double mean);

  // Index drawn proportionally to weights; weights must not all be zero.
  size_t weighted(const std::vector<double>& weights);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

uint64_t splitmix64(uint64_t x);

// Stable 64-bit FNV-1a.
uint64_t fnv1a(std::string_view text);

// Seed for the stream of segment `index` of the file named `key`.
uint64_t derive_seed(uint64_t seed, std::string_view key, uint64_t index);

}  // namespace octomidi

#endif  // OCTOMIDI_RNG_H_
