#pragma once

// Evaluation points and the dual generalized Reed-Solomon multipliers
//   v_{m,n} = prod_{n' in R_m \ {n}} (beta_n - beta_{n'})^{-1}
// which satisfy sum_{n in R_m} v_{m,n} beta_n^j = 0 for j = 0..rho_m - 2.

#include <optional>
#include <span>
#include <vector>

#include "gxstpir/error.hpp"
#include "gxstpir/ff.hpp"
#include "gxstpir/model.hpp"

namespace gxstpir::grscoef {

using ff::FieldElement;
using ff::PrimeField;

struct EvaluationPoints {
  PrimeField field;
  std::vector<FieldElement> beta;  // beta[n - 1] for server n
  int block_length = 1;            // L

  const FieldElement& at(int n) const { return beta.at(n - 1); }
};

/// v_{m,n} for every m and every n in R_m, aligned with the order of R_m.
struct GrsCoefficients {
  std::vector<std::vector<FieldElement>> v;

  const FieldElement& at(const model::StoragePattern& p, int m, int n) const {
    const auto& servers = p.servers(m);
    auto it = std::lower_bound(servers.begin(), servers.end(), n);
    enforce(it != servers.end() && *it == n, ErrorCode::InvalidArgument,
            "server " + std::to_string(n) + " does not store message set " +
                std::to_string(m));
    return v.at(m - 1).at(static_cast<std::size_t>(it - servers.begin()));
  }
};

/// The smallest prime above N + L unless the caller supplies one.
inline PrimeField choose_field(int n_servers, int block_length,
                               std::optional<std::uint64_t> user_q = {}) {
  const std::uint64_t floor = static_cast<std::uint64_t>(n_servers + block_length);
  if (user_q) {
    enforce(*user_q > floor, ErrorCode::FieldTooSmall,
            "q = " + std::to_string(*user_q) + " must exceed N + L = " +
                std::to_string(floor));
    return PrimeField(*user_q);
  }
  return PrimeField(ff::next_prime_above(floor));
}

/// First N elements of 1, 2, ..., q-1 with beta + l != 0 for all l in [L].
inline EvaluationPoints choose_points(const PrimeField& field, int n_servers,
                                      int block_length) {
  enforce(block_length >= 1, ErrorCode::InvalidArgument, "L must be >= 1");
  EvaluationPoints pts{field, {}, block_length};
  for (std::uint32_t c = 1; c < field.modulus() &&
                            static_cast<int>(pts.beta.size()) < n_servers;
       ++c) {
    FieldElement b(field, c);
    bool ok = true;
    for (int l = 1; l <= block_length && ok; ++l) ok = !(b + field.elem(l)).is_zero();
    if (ok) pts.beta.push_back(b);
  }
  enforce(static_cast<int>(pts.beta.size()) == n_servers,
          ErrorCode::InsufficientPoints,
          "F_" + std::to_string(field.modulus()) + " has only " +
              std::to_string(pts.beta.size()) + " admissible points");
  return pts;
}

/// Dual-GRS multipliers for one set of distinct points.
inline std::vector<FieldElement> dual_grs_multipliers(
    std::span<const FieldElement> points) {
  std::vector<FieldElement> v;
  v.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    FieldElement prod = points[i].field().one();
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i) prod *= points[i] - points[j];
    v.push_back(prod.inv());
  }
  return v;
}

inline GrsCoefficients dual_grs_coeffs(const EvaluationPoints& points,
                                       const model::StoragePattern& pattern) {
  GrsCoefficients c;
  for (int m = 1; m <= pattern.num_sets(); ++m) {
    std::vector<FieldElement> local;
    for (int n : pattern.servers(m)) local.push_back(points.at(n));
    c.v.push_back(dual_grs_multipliers(local));
  }
  return c;
}

/// sum_i v_i x_i^j == 0 for every j in 0..n-2.
inline bool annihilates(std::span<const FieldElement> points,
                        std::span<const FieldElement> v) {
  if (points.empty()) return true;
  const auto field = points.front().field();
  for (std::size_t j = 0; j + 2 <= points.size(); ++j) {
    FieldElement s = field.zero();
    for (std::size_t i = 0; i < points.size(); ++i) s += v[i] * points[i].pow(j);
    if (!s.is_zero()) return false;
  }
  return true;
}

inline bool annihilator_check(const EvaluationPoints& points,
                              const model::StoragePattern& pattern,
                              const GrsCoefficients& coeffs, int m) {
  std::vector<FieldElement> local;
  for (int n : pattern.servers(m)) local.push_back(points.at(n));
  return annihilates(local, coeffs.v.at(m - 1));
}

}  // namespace gxstpir::grscoef
