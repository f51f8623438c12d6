#pragma once

// Shared helpers for the test binaries: seeded random inputs and small
// brute-force oracles that do not reuse the library's algorithms.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gxstpir/ff.hpp"
#include "gxstpir/model.hpp"

namespace testsupport {

using gxstpir::ff::FieldElement;
using gxstpir::ff::FieldMatrix;
using gxstpir::ff::PrimeField;

inline std::string source_dir() { return GXSTPIR_SOURCE_DIR; }

/// Random pattern: N servers, M sets, each rho_m in [rho_lo, rho_hi], K_m in
/// [1, k_hi].
inline gxstpir::model::StoragePattern random_pattern(std::mt19937_64& rng, int n, int m,
                                                     int rho_lo, int rho_hi, int k_hi = 2) {
  gxstpir::model::RawPattern raw{n, {}};
  std::vector<int> servers(n);
  std::iota(servers.begin(), servers.end(), 1);
  for (int i = 0; i < m; ++i) {
    int rho = std::uniform_int_distribution<int>(rho_lo, std::min(rho_hi, n))(rng);
    std::shuffle(servers.begin(), servers.end(), rng);
    std::vector<int> r(servers.begin(), servers.begin() + rho);
    int k = std::uniform_int_distribution<int>(1, k_hi)(rng);
    raw.message_sets.push_back({k, r});
  }
  return gxstpir::model::validate(raw);
}

/// Number of distinct vectors in the row span, by closing under addition of
/// scalar multiples. The rank is log_q of this count.
inline std::size_t span_size(const FieldMatrix& m) {
  const auto& f = m.field();
  std::set<std::vector<std::uint32_t>> span{std::vector<std::uint32_t>(m.cols(), 0)};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::set<std::vector<std::uint32_t>> next;
    for (const auto& v : span)
      for (std::uint32_t c = 0; c < f.modulus(); ++c) {
        auto w = v;
        for (std::size_t j = 0; j < m.cols(); ++j)
          w[j] = static_cast<std::uint32_t>((w[j] + static_cast<std::uint64_t>(c) * m(r, j).value()) %
                                            f.modulus());
        next.insert(w);
      }
    span = std::move(next);
  }
  return span.size();
}

inline std::size_t brute_rank(const FieldMatrix& m) {
  std::size_t size = span_size(m), rank = 0;
  while (size > 1) {
    size /= m.field().modulus();
    ++rank;
  }
  return rank;
}

inline FieldMatrix random_matrix(std::mt19937_64& rng, const PrimeField& f, std::size_t r,
                                 std::size_t c) {
  FieldMatrix m(f, r, c);
  std::uniform_int_distribution<std::uint32_t> d(0, f.modulus() - 1);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = FieldElement(f, d(rng));
  return m;
}

/// Distinct nonzero points drawn uniformly from F_q.
inline std::vector<FieldElement> random_points(std::mt19937_64& rng, const PrimeField& f,
                                               std::size_t n) {
  std::vector<std::uint32_t> pool(f.modulus() - 1);
  std::iota(pool.begin(), pool.end(), 1u);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<FieldElement> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(f, pool[i]);
  return out;
}

}  // namespace testsupport
