#pragma once

// Dense two-phase simplex over exact rationals with Bland's rule.
//
//   maximize c.x  subject to  A x <= b,  x >= 0
//
// b may have any sign; rows with negative b get a surplus and an artificial
// variable and phase one drives the artificials to zero.

#include <cstddef>
#include <vector>

#include "gxstpir/error.hpp"
#include "gxstpir/rational.hpp"

namespace gxstpir::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  Rational value;
  std::vector<Rational> x;
  std::size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : a_(rows, std::vector<Rational>(cols + 1)), obj_(cols + 1),
        basis_(rows, 0), cols_(cols) {}

  Rational& at(std::size_t r, std::size_t c) { return a_[r][c]; }
  Rational& rhs(std::size_t r) { return a_[r][cols_]; }
  std::vector<Rational>& obj() { return obj_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t rows() const { return a_.size(); }
  std::size_t cols() const { return cols_; }
  std::size_t pivots() const { return pivots_; }

  void drop_row(std::size_t r) {
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
  }

  void pivot(std::size_t r, std::size_t c) {
    ++pivots_;
    Rational p = a_[r][c];
    for (auto& e : a_[r])
      if (e != 0) e /= p;
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (i == r || a_[i][c] == 0) continue;
      eliminate(a_[i], a_[r], Rational(a_[i][c]));
    }
    if (obj_[c] != 0) eliminate(obj_, a_[r], Rational(obj_[c]));
    basis_[r] = c;
  }

  /// Makes the objective row consistent with the current basis.
  void price_out() {
    for (std::size_t i = 0; i < a_.size(); ++i) {
      std::size_t b = basis_[i];
      if (obj_[b] != 0) eliminate(obj_, a_[i], Rational(obj_[b]));
    }
  }

  /// Bland's rule. `allowed` masks columns that may enter. Returns false if
  /// the objective is unbounded.
  bool optimize(const std::vector<bool>& allowed) {
    while (true) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j)
        if (allowed[j] && obj_[j] < 0) {
          enter = j;
          break;
        }
      if (enter == cols_) return true;
      std::size_t leave = a_.size();
      Rational best;
      for (std::size_t i = 0; i < a_.size(); ++i) {
        if (a_[i][enter] <= 0) continue;
        Rational ratio = a_[i][cols_] / a_[i][enter];
        if (leave == a_.size() || ratio < best ||
            (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == a_.size()) return false;
      pivot(leave, enter);
    }
  }

 private:
  static void eliminate(std::vector<Rational>& row,
                        const std::vector<Rational>& pivot_row,
                        const Rational& factor) {
    for (std::size_t j = 0; j < row.size(); ++j)
      if (pivot_row[j] != 0) row[j] -= factor * pivot_row[j];
  }

  std::vector<std::vector<Rational>> a_;
  std::vector<Rational> obj_;
  std::vector<std::size_t> basis_;
  std::size_t cols_;
  std::size_t pivots_ = 0;
};

}  // namespace detail

inline Result maximize(const std::vector<std::vector<Rational>>& a,
                       const std::vector<Rational>& b,
                       const std::vector<Rational>& c) {
  const std::size_t m = a.size();
  const std::size_t n = c.size();
  enforce(b.size() == m, ErrorCode::DimensionMismatch, "lp: |b| != rows");
  for (const auto& row : a)
    enforce(row.size() == n, ErrorCode::DimensionMismatch, "lp: ragged A");

  std::size_t n_art = 0;
  for (const auto& bi : b)
    if (bi < 0) ++n_art;
  // Columns: [x (n)] [slack/surplus (m)] [artificial (n_art)].
  const std::size_t cols = n + m + n_art;
  detail::Tableau tab(m, cols);
  std::vector<bool> is_art(cols, false);
  std::size_t art = n + m;
  for (std::size_t i = 0; i < m; ++i) {
    const Rational sign = b[i] < 0 ? Rational(-1) : Rational(1);
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * a[i][j];
    tab.at(i, n + i) = sign;
    tab.rhs(i) = sign * b[i];
    if (b[i] < 0) {
      tab.at(i, art) = 1;
      is_art[art] = true;
      tab.basis()[i] = art++;
    } else {
      tab.basis()[i] = n + i;
    }
  }

  Result result;
  std::vector<bool> allowed(cols, true);
  if (n_art > 0) {
    // Phase one: maximize -(sum of artificials).
    for (std::size_t j = 0; j < cols; ++j) tab.obj()[j] = is_art[j] ? 1 : 0;
    tab.obj()[cols] = 0;
    tab.price_out();
    tab.optimize(allowed);
    if (tab.obj()[cols] != 0) {
      result.status = Status::Infeasible;
      result.pivots = tab.pivots();
      return result;
    }
    // Drive remaining (zero-valued) artificials out of the basis.
    for (std::size_t i = 0; i < tab.rows();) {
      if (!is_art[tab.basis()[i]]) {
        ++i;
        continue;
      }
      std::size_t enter = cols;
      for (std::size_t j = 0; j < cols && enter == cols; ++j)
        if (!is_art[j] && tab.at(i, j) != 0) enter = j;
      if (enter == cols) {
        tab.drop_row(i);  // redundant constraint
      } else {
        tab.pivot(i, enter);
        ++i;
      }
    }
    for (std::size_t j = 0; j < cols; ++j) allowed[j] = !is_art[j];
  }

  for (std::size_t j = 0; j <= cols; ++j) tab.obj()[j] = 0;
  for (std::size_t j = 0; j < n; ++j) tab.obj()[j] = -c[j];
  tab.price_out();
  if (!tab.optimize(allowed)) {
    result.status = Status::Unbounded;
    result.pivots = tab.pivots();
    return result;
  }
  result.status = Status::Optimal;
  result.value = tab.obj()[cols];
  result.x.assign(n, Rational(0));
  for (std::size_t i = 0; i < tab.rows(); ++i)
    if (tab.basis()[i] < n) result.x[tab.basis()[i]] = tab.rhs(i);
  result.pivots = tab.pivots();
  return result;
}

}  // namespace gxstpir::lp
