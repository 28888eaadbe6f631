#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace lungalloc {

/// splitmix64 finalizer; used to derive independent sub-stream seeds.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class StreamPurpose : uint64_t {
  PatientArrivals = 1,
  InitialStates = 2,
  Transitions = 3,
  OrganArrivals = 4,
  Allocation = 5,
  PostTransplant = 6,
};

/// One reproducible random stream, keyed by (root seed, replication,
/// purpose, salt). Streams with distinct keys are independent; the same key
/// always replays the same sequence within one build.
class Substream {
 public:
  Substream(uint64_t root_seed, uint64_t replication, StreamPurpose purpose, uint64_t salt = 0)
      : engine_(mix64(mix64(mix64(root_seed) ^ replication) ^
                      (static_cast<uint64_t>(purpose) << 32 | salt))) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  uint64_t uniform_index(uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index needs n > 0");
    return std::uniform_int_distribution<uint64_t>(0, n - 1)(engine_);
  }

  int poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson mean must be nonnegative");
    if (mean == 0.0) return 0;
    return std::poisson_distribution<int>(mean)(engine_);
  }

  double exponential(double mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("exponential mean must be positive");
    return std::exponential_distribution<double>(1.0 / mean)(engine_);
  }

  /// Samples an index by cumulative scan; any leftover mass (rounding) goes
  /// to the last index.
  int categorical(const double* probs, int n) {
    const double u = uniform();
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += probs[k];
      if (u < acc) return k;
    }
    return n - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lungalloc
