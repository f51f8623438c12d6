#pragma once

// Prime-field arithmetic and the small dense linear algebra used by the
// scheme, the coefficient construction and the verifiers.

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <tuple>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gxstpir/error.hpp"

namespace gxstpir::ff {

/// Deterministic trial division; moduli here never exceed 2^31.
constexpr bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n < 4) return true;
  if (n % 2 == 0 || n % 3 == 0) return false;
  for (std::uint64_t d = 5; d * d <= n; d += 6) {
    if (n % d == 0 || n % (d + 2) == 0) return false;
  }
  return true;
}

/// Smallest prime strictly greater than n.
constexpr std::uint64_t next_prime_above(std::uint64_t n) {
  std::uint64_t p = n + 1;
  while (!is_prime(p)) ++p;
  return p;
}

class FieldElement;

/// F_q for a prime q < 2^31.
class PrimeField {
 public:
  static constexpr std::uint64_t kMaxModulus = 1ULL << 31;

  explicit PrimeField(std::uint64_t q) : q_(static_cast<std::uint32_t>(q)) {
    enforce(q < kMaxModulus, ErrorCode::NotPrime,
            "modulus " + std::to_string(q) + " exceeds 2^31");
    enforce(is_prime(q), ErrorCode::NotPrime,
            std::to_string(q) + " is not prime");
  }

  std::uint32_t modulus() const noexcept { return q_; }

  /// Reduces any integer (including negatives) into the field.
  FieldElement elem(std::int64_t v) const;
  FieldElement zero() const;
  FieldElement one() const;

  friend bool operator==(const PrimeField&, const PrimeField&) = default;

 private:
  std::uint32_t q_;
};

/// An element of F_q. A default-constructed element belongs to no field and
/// is rejected by every arithmetic operation.
class FieldElement {
 public:
  FieldElement() = default;
  FieldElement(const PrimeField& field, std::uint64_t value)
      : value_(static_cast<std::uint32_t>(value % field.modulus())),
        q_(field.modulus()) {}

  std::uint32_t value() const noexcept { return value_; }
  std::uint32_t modulus() const noexcept { return q_; }
  PrimeField field() const {
    check_bound();
    return PrimeField(q_);
  }
  bool is_zero() const noexcept { return value_ == 0; }

  friend FieldElement operator+(FieldElement a, const FieldElement& b) {
    a.check_same(b);
    std::uint64_t s = std::uint64_t{a.value_} + b.value_;
    a.value_ = static_cast<std::uint32_t>(s >= a.q_ ? s - a.q_ : s);
    return a;
  }
  friend FieldElement operator-(FieldElement a, const FieldElement& b) {
    a.check_same(b);
    a.value_ = a.value_ >= b.value_ ? a.value_ - b.value_
                                    : a.value_ + (a.q_ - b.value_);
    return a;
  }
  friend FieldElement operator*(FieldElement a, const FieldElement& b) {
    a.check_same(b);
    a.value_ = static_cast<std::uint32_t>(
        (std::uint64_t{a.value_} * b.value_) % a.q_);
    return a;
  }
  friend FieldElement operator/(const FieldElement& a, const FieldElement& b) {
    return a * b.inv();
  }
  FieldElement operator-() const {
    check_bound();
    FieldElement r = *this;
    r.value_ = value_ == 0 ? 0 : q_ - value_;
    return r;
  }
  FieldElement& operator+=(const FieldElement& b) { return *this = *this + b; }
  FieldElement& operator-=(const FieldElement& b) { return *this = *this - b; }
  FieldElement& operator*=(const FieldElement& b) { return *this = *this * b; }

  /// pow(0, 0) == 1.
  FieldElement pow(std::uint64_t k) const {
    check_bound();
    std::uint64_t base = value_, acc = 1 % q_;
    while (k > 0) {
      if (k & 1) acc = acc * base % q_;
      base = base * base % q_;
      k >>= 1;
    }
    FieldElement r = *this;
    r.value_ = static_cast<std::uint32_t>(acc);
    return r;
  }

  FieldElement inv() const {
    check_bound();
    enforce(value_ != 0, ErrorCode::ZeroInverse, "inverse of zero in F_" +
                                                     std::to_string(q_));
    // Extended Euclid.
    std::int64_t t = 0, new_t = 1, r = q_, new_r = value_;
    while (new_r != 0) {
      std::int64_t quot = r / new_r;
      std::tie(t, new_t) = std::pair{new_t, t - quot * new_t};
      std::tie(r, new_r) = std::pair{new_r, r - quot * new_r};
    }
    if (t < 0) t += q_;
    FieldElement out = *this;
    out.value_ = static_cast<std::uint32_t>(t);
    return out;
  }

  friend bool operator==(const FieldElement& a, const FieldElement& b) {
    return a.q_ == b.q_ && a.value_ == b.value_;
  }

  friend std::ostream& operator<<(std::ostream& os, const FieldElement& a) {
    return os << a.value_;
  }

 private:
  void check_bound() const {
    enforce(q_ != 0, ErrorCode::FieldMismatch, "element not bound to a field");
  }
  void check_same(const FieldElement& b) const {
    check_bound();
    enforce(q_ == b.q_, ErrorCode::FieldMismatch,
            "F_" + std::to_string(q_) + " vs F_" + std::to_string(b.q_));
  }

  std::uint32_t value_ = 0;
  std::uint32_t q_ = 0;
};

inline FieldElement PrimeField::elem(std::int64_t v) const {
  std::int64_t r = v % static_cast<std::int64_t>(q_);
  if (r < 0) r += q_;
  return FieldElement(*this, static_cast<std::uint64_t>(r));
}
inline FieldElement PrimeField::zero() const { return FieldElement(*this, 0); }
inline FieldElement PrimeField::one() const { return FieldElement(*this, 1); }

inline FieldElement add(const FieldElement& a, const FieldElement& b) { return a + b; }
inline FieldElement sub(const FieldElement& a, const FieldElement& b) { return a - b; }
inline FieldElement mul(const FieldElement& a, const FieldElement& b) { return a * b; }
inline FieldElement neg(const FieldElement& a) { return -a; }
inline FieldElement pow(const FieldElement& a, std::uint64_t k) { return a.pow(k); }
inline FieldElement inv(const FieldElement& a) { return a.inv(); }

/// Inner product of equal-length vectors.
inline FieldElement dot(std::span<const FieldElement> a,
                        std::span<const FieldElement> b,
                        const PrimeField& field) {
  enforce(a.size() == b.size(), ErrorCode::DimensionMismatch,
          "dot of lengths " + std::to_string(a.size()) + " and " +
              std::to_string(b.size()));
  FieldElement acc = field.zero();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Row-major dense matrix over one prime field.
class FieldMatrix {
 public:
  FieldMatrix(const PrimeField& field, std::size_t rows, std::size_t cols)
      : field_(field), rows_(rows), cols_(cols),
        data_(rows * cols, field.zero()) {}

  static FieldMatrix identity(const PrimeField& field, std::size_t n) {
    FieldMatrix m(field, n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = field.one();
    return m;
  }

  static FieldMatrix from_rows(
      const PrimeField& field,
      std::initializer_list<std::initializer_list<std::int64_t>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    FieldMatrix m(field, r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      enforce(row.size() == c, ErrorCode::DimensionMismatch, "ragged rows");
      std::size_t j = 0;
      for (std::int64_t v : row) m(i, j++) = field.elem(v);
      ++i;
    }
    return m;
  }

  /// Rows (x_j^0, ..., x_j^{rows-1}) transposed: entry (i, j) = x_j^i.
  static FieldMatrix vandermonde(const PrimeField& field,
                                 std::span<const FieldElement> points,
                                 std::size_t rows) {
    FieldMatrix m(field, rows, points.size());
    for (std::size_t j = 0; j < points.size(); ++j) {
      FieldElement p = field.one();
      for (std::size_t i = 0; i < rows; ++i) {
        m(i, j) = p;
        p *= points[j];
      }
    }
    return m;
  }

  const PrimeField& field() const noexcept { return field_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  FieldElement& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  const FieldElement& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<const FieldElement> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  friend FieldMatrix operator*(const FieldMatrix& a, const FieldMatrix& b) {
    enforce(a.field_ == b.field_, ErrorCode::FieldMismatch, "matrix product");
    enforce(a.cols_ == b.rows_, ErrorCode::DimensionMismatch,
            "matrix product inner dimensions");
    FieldMatrix out(a.field_, a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const FieldElement& aik = a(i, k);
        if (aik.is_zero()) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend bool operator==(const FieldMatrix& a, const FieldMatrix& b) {
    return a.field_ == b.field_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ &&
           a.data_ == b.data_;
  }

  bool is_zero() const {
    for (const auto& e : data_)
      if (!e.is_zero()) return false;
    return true;
  }

 private:
  PrimeField field_;
  std::size_t rows_, cols_;
  std::vector<FieldElement> data_;
};

namespace detail {

/// In-place reduced row echelon form with first-nonzero pivoting. Returns
/// the pivot column of each pivot row. The first `limit` columns are the only
/// pivot candidates.
inline std::vector<std::size_t> rref(FieldMatrix& m, std::size_t limit) {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < limit && row < m.rows(); ++col) {
    std::size_t p = row;
    while (p < m.rows() && m(p, col).is_zero()) ++p;
    if (p == m.rows()) continue;
    if (p != row)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(row, j));
    FieldElement scale = m(row, col).inv();
    for (std::size_t j = 0; j < m.cols(); ++j) m(row, j) *= scale;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == row || m(i, col).is_zero()) continue;
      FieldElement f = m(i, col);
      for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) -= f * m(row, j);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

}  // namespace detail

inline std::size_t mat_rank(const FieldMatrix& m) {
  FieldMatrix work = m;
  return detail::rref(work, work.cols()).size();
}

inline FieldMatrix mat_invert(const FieldMatrix& m) {
  enforce(m.rows() == m.cols(), ErrorCode::DimensionMismatch,
          "inverse of non-square matrix");
  const std::size_t n = m.rows();
  FieldMatrix aug(m.field(), n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = m(i, j);
    aug(i, n + i) = m.field().one();
  }
  auto pivots = detail::rref(aug, n);
  enforce(pivots.size() == n, ErrorCode::Singular,
          "rank " + std::to_string(pivots.size()) + " < " + std::to_string(n));
  FieldMatrix out(m.field(), n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = aug(i, n + j);
  return out;
}

/// Solves a x = b for square invertible a.
inline std::vector<FieldElement> solve(const FieldMatrix& a,
                                       std::span<const FieldElement> b) {
  enforce(a.rows() == b.size(), ErrorCode::DimensionMismatch, "solve rhs");
  FieldMatrix inv = mat_invert(a);
  std::vector<FieldElement> x(a.cols(), a.field().zero());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < a.rows(); ++j) x[i] += inv(i, j) * b[j];
  return x;
}

/// True iff `v` lies in the row space of `m`.
inline bool in_row_space(const FieldMatrix& m, std::span<const FieldElement> v) {
  enforce(v.size() == m.cols(), ErrorCode::DimensionMismatch, "row-space test");
  FieldMatrix ext(m.field(), m.rows() + 1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) ext(i, j) = m(i, j);
  for (std::size_t j = 0; j < m.cols(); ++j) ext(m.rows(), j) = v[j];
  return mat_rank(ext) == mat_rank(m);
}

}  // namespace gxstpir::ff
