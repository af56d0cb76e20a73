#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vitalguard {

/// Base class for every error thrown by the library. Each module defines
/// narrow subclasses so callers can catch exactly what they can handle.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Deterministic random numbers.
//
// The standard distributions (<random>'s normal/uniform distributions) are
// implementation defined, which would break the bit-identical reproducibility
// the file formats promise. The engine is std::mt19937_64; the mapping from
// raw 64-bit draws to doubles is pinned here instead.
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  /// Raw 64-bit draw (splitmix64; tiny, fast, and fully specified).
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 bits of randomness.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  /// Standard normal via Box-Muller (the spare draw is discarded so the
  /// stream position depends only on the number of calls).
  double gaussian() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  /// Normal(mean, stddev) truncated to [lo, hi] by rejection sampling with a
  /// clamp fallback after `max_tries` rejections.
  double truncated_gaussian(double mean, double stddev, double lo, double hi,
                            int max_tries = 256) {
    for (int i = 0; i < max_tries; ++i) {
      const double x = mean + stddev * gaussian();
      if (x >= lo && x <= hi) return x;
    }
    const double x = mean + stddev * gaussian();
    return x < lo ? lo : (x > hi ? hi : x);
  }

  /// Derive an independent child stream; mixing the tag keeps sibling
  /// streams decorrelated regardless of how many draws the parent made.
  Rng child(std::uint64_t tag) const {
    Rng mixer(state_ ^ (0xd1b54a32d192ed03ULL * (tag + 1)));
    return Rng(mixer.next_u64());
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle using Rng::below (std::shuffle's draw
/// pattern is not pinned by the standard).
template <typename Vec>
void deterministic_shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

/// FNV-1a 64-bit hash, used to fingerprint input artifacts inside reports.
std::uint64_t fnv1a64(std::string_view bytes);

/// Hex string of fnv1a64 ("fnv1a64:deadbeef01234567").
std::string content_fingerprint(std::string_view bytes);

/// Reads a whole file into a string. Throws Error if unreadable.
std::string read_file(const std::string& path);

/// Writes a string to a file (truncating). Throws Error on failure.
void write_file(const std::string& path, std::string_view contents);

}  // namespace vitalguard
