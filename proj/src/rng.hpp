#pragma once

#include <cstdint>
#include <string_view>

namespace l2t {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return splitmix64(splitmix64(a) ^ b); }

// Maps a 64-bit hash onto [0,1). Used for order-independent per-record
// decisions (split parity, subsample filters).
inline double hash_to_unit(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Draw interface. Generators take an RngBase& so tests can substitute a
// scripted stream and pin individual draws.
class RngBase {
 public:
  virtual ~RngBase() = default;
  virtual uint64_t next_u64() = 0;

  // Unbiased integer in [0, n). Lemire multiply-shift with rejection.
  virtual uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      const uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform in [0,1) with 53-bit resolution.
  virtual double next_double() { return hash_to_unit(next_u64()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
};

// Counter-based stream: output i is a pure function of (base, i), so any
// (seed, doc_id, chunk_index) triple reproduces the same draws on replay.
class SplitMixRng final : public RngBase {
 public:
  explicit SplitMixRng(uint64_t base) : state_(base) {}
  uint64_t next_u64() override {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

 private:
  uint64_t state_;
};

}  // namespace l2t
