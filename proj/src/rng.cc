#include "octomidi/rng.h"

#include <cmath>
#include <limits>

#include "octomidi/error.h"

namespace octomidi {

uint64_t Rng::uniform(uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kOutOfRange, "uniform(0)");
  // Rejection keeps the draw exactly uniform.
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % n;
  uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

int Rng::poisson(double mean) {
  const double threshold = std::exp(-mean);
  int k = 0;
  double product = uniform_real();
  while (product > threshold) {
    ++k;
    product *= uniform_real();
  }
  return k;
}

size_t Rng::weighted(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidConfig, "all weights are zero");
  double x = uniform_real() * total;
  size_t last_positive = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (x < weights[i]) return i;
    x -= weights[i];
  }
  return last_positive;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t derive_seed(uint64_t seed, std::string_view key, uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a(key)) + index);
}

}  // namespace octomidi
