#pragma once

// Seeded, domain-separated randomness for transcripts.
//
// Every symbol is addressed by (role, a, b, c, d). The 64-bit word for an
// address is
//   h_0 = splitmix64(seed)
//   h_{i+1} = splitmix64(h_i ^ f_i)   for f = (role, a, b, c, d, attempt)
// and the symbol is h mod q, retrying with attempt + 1 while h falls in the
// biased tail [2^64 - (2^64 mod q), 2^64). This derivation is frozen: the
// checked-in fixtures and transcript hashes depend on it.

#include <cstdint>
#include <limits>

#include "gxstpir/ff.hpp"

namespace gxstpir::noise {

enum class Role : std::uint64_t {
  Message = 1,
  StorageNoise = 2,
  QueryNoise = 3,
  Demand = 4,
  Lambda = 5,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class NoiseTape {
 public:
  explicit NoiseTape(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t word(Role role, std::uint64_t a, std::uint64_t b,
                     std::uint64_t c, std::uint64_t d,
                     std::uint64_t attempt) const {
    std::uint64_t h = splitmix64(seed_);
    for (std::uint64_t f : {static_cast<std::uint64_t>(role), a, b, c, d, attempt})
      h = splitmix64(h ^ f);
    return h;
  }

  /// Uniform integer in [0, bound).
  std::uint64_t uniform(std::uint64_t bound, Role role, std::uint64_t a,
                        std::uint64_t b = 0, std::uint64_t c = 0,
                        std::uint64_t d = 0) const {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % bound + 1) % bound;
    for (std::uint64_t attempt = 0;; ++attempt) {
      std::uint64_t h = word(role, a, b, c, d, attempt);
      if (h <= limit) return h % bound;
    }
  }

  ff::FieldElement element(const ff::PrimeField& field, Role role,
                           std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0, std::uint64_t d = 0) const {
    return ff::FieldElement(field, uniform(field.modulus(), role, a, b, c, d));
  }

 private:
  std::uint64_t seed_;
};

}  // namespace gxstpir::noise
