#pragma once

// Seeded random streams. Everything here is defined on raw 64-bit engine
// output so results do not depend on the standard library's distribution
// implementations.

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace uslads {

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a named sub-stream, e.g. derive_seed(seed, "baseline").
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream)
{
  std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on [0, n), unbiased. n must be positive.
  std::uint64_t below(std::uint64_t n)
  {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform integer on [lo, hi].
  int between(int lo, int hi)
  {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

private:
  std::mt19937_64 engine_;
};

/// First `count` entries of a uniform random permutation of [0, n).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng)
{
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

} // namespace uslads
