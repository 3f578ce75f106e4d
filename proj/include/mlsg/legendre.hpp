// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_LEGENDRE_HPP
#define MLSG_LEGENDRE_HPP

#include <cmath>
#include <vector>

#include "mlsg/common.hpp"
#include "mlsg/multiindex.hpp"

namespace mlsg {

/// Recurrence coefficients beta_n of the polynomials orthonormal w.r.t. the
/// uniform measure dy/2 on [-1, 1]:
///   beta_n P_{n+1}(y) = y P_n(y) - beta_{n-1} P_{n-1}(y),  P_0 = 1.
/// The measure is the same for every parameter, so one table serves all m.
class RecurrenceTable {
public:
  explicit RecurrenceTable(int n_max) : beta_(n_max + 2, 0.0) {
    // beta_[0] is the unused beta_{-1} slot (P_{-1} = 0)
    for (int n = 0; n <= n_max; ++n) {
      beta_[n + 1] =
          (n + 1.0) / std::sqrt((2.0 * n + 1.0) * (2.0 * n + 3.0));
    }
    n_max_ = n_max;
  }

  int n_max() const { return n_max_; }

  double beta(int n) const {
    if (n < -1 || n > n_max_) throw Error("recurrence table: degree exceeded");
    return beta_[n + 1];
  }

  /// Values P_0(y), ..., P_n(y) by the three-term recurrence.
  std::vector<double> evaluate_all(int n, double y) const {
    std::vector<double> p(n + 1, 0.0);
    if (n >= 0) p[0] = 1.0;
    double prev = 0.0;
    for (int k = 0; k < n; ++k) {
      p[k + 1] = (y * p[k] - beta(k - 1) * prev) / beta(k);
      prev = p[k];
    }
    return p;
  }

private:
  std::vector<double> beta_;
  int n_max_ = 0;
};

inline RecurrenceTable recurrence_table(int n_max) {
  return RecurrenceTable(n_max);
}

/// Sparse coupling matrix G_m over a (rows, cols) pair of index sets:
///   [G_m]_{nu mu} = delta_{nu mu}                      for m = 0,
///   [G_m]_{nu mu} = beta_{mu_m}   if nu = mu + eps_m
///                 + beta_{mu_m-1} if nu = mu - eps_m   for m >= 1.
struct CouplingMatrix {
  struct Entry {
    int row;
    int col;
    double value;
  };
  int rows = 0;
  int cols = 0;
  std::vector<Entry> entries;

  double operator()(int row, int col) const {
    for (const auto& e : entries) {
      if (e.row == row && e.col == col) return e.value;
    }
    return 0.0;
  }
};

inline CouplingMatrix build_G(int m, const IndexSet& rows, const IndexSet& cols,
                              const RecurrenceTable& table) {
  CouplingMatrix g;
  g.rows = rows.size();
  g.cols = cols.size();
  if (m == 0) {
    for (int j = 0; j < cols.size(); ++j) {
      const int i = rows.position(cols[j]);
      if (i >= 0) g.entries.push_back({i, j, 1.0});
    }
    return g;
  }
  for (int j = 0; j < cols.size(); ++j) {
    const MultiIndex& mu = cols[j];
    if (mu[m] > table.n_max()) {
      throw Error("build_G: multi-index degree exceeds recurrence table");
    }
    const int up = rows.position(mu.raised(m));
    if (up >= 0) g.entries.push_back({up, j, table.beta(mu[m])});
    if (mu[m] >= 1) {
      const int down = rows.position(mu.lowered(m));
      if (down >= 0) g.entries.push_back({down, j, table.beta(mu[m] - 1)});
    }
  }
  return g;
}

}  // namespace mlsg

#endif  // MLSG_LEGENDRE_HPP
