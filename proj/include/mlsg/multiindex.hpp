// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_MULTIINDEX_HPP
#define MLSG_MULTIINDEX_HPP

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mlsg/common.hpp"

namespace mlsg {

/// Finitely supported parametric multi-index. Entries are stored sparsely as
/// (parameter, degree) pairs with parameter >= 1 and degree >= 1, sorted by
/// parameter.
class MultiIndex {
public:
  MultiIndex() = default;

  static MultiIndex zero() { return MultiIndex(); }

  static MultiIndex unit(int m) {
    MultiIndex nu;
    nu.entries_.push_back({m, 1});
    return nu;
  }

  static MultiIndex from_dense(const std::vector<int>& degrees) {
    MultiIndex nu;
    for (int m = 0; m < static_cast<int>(degrees.size()); ++m) {
      if (degrees[m] < 0) throw Error("multi-index: negative entry");
      if (degrees[m] > 0) nu.entries_.push_back({m + 1, degrees[m]});
    }
    return nu;
  }

  int operator[](int m) const {
    for (const auto& [p, d] : entries_) {
      if (p == m) return d;
      if (p > m) break;
    }
    return 0;
  }

  bool is_zero() const { return entries_.empty(); }
  int total_degree() const {
    int s = 0;
    for (const auto& [p, d] : entries_) s += d;
    return s;
  }
  int max_support() const { return entries_.empty() ? 0 : entries_.back().first; }

  std::vector<int> support() const {
    std::vector<int> s;
    s.reserve(entries_.size());
    for (const auto& [p, d] : entries_) s.push_back(p);
    return s;
  }

  /// nu + eps_m
  MultiIndex raised(int m) const { return shifted(m, +1); }

  /// nu - eps_m; throws if nu_m = 0
  MultiIndex lowered(int m) const {
    if ((*this)[m] == 0) throw Error("multi-index: entry would become negative");
    return shifted(m, -1);
  }

  bool operator==(const MultiIndex& o) const { return entries_ == o.entries_; }
  bool operator!=(const MultiIndex& o) const { return !(*this == o); }

  /// Graded order: total degree first, then entrywise from parameter 1 with
  /// the larger entry ordered first.
  bool operator<(const MultiIndex& o) const {
    const int da = total_degree(), db = o.total_degree();
    if (da != db) return da < db;
    auto ia = entries_.begin();
    auto ib = o.entries_.begin();
    while (ia != entries_.end() && ib != o.entries_.end()) {
      if (ia->first != ib->first) return ia->first < ib->first;
      if (ia->second != ib->second) return ia->second > ib->second;
      ++ia;
      ++ib;
    }
    return ib != o.entries_.end();
  }

  std::string to_string(int width = 0) const {
    const int w = std::max(width, max_support());
    std::ostringstream os;
    os << '(';
    for (int m = 1; m <= std::max(w, 1); ++m) {
      if (m > 1) os << ' ';
      os << (*this)[m];
    }
    os << ')';
    return os.str();
  }

  const std::vector<std::pair<int, int>>& entries() const { return entries_; }

private:
  MultiIndex shifted(int m, int delta) const {
    MultiIndex out;
    bool placed = false;
    for (const auto& [p, d] : entries_) {
      if (p == m) {
        if (d + delta > 0) out.entries_.push_back({p, d + delta});
        placed = true;
      } else {
        if (!placed && p > m && delta > 0) {
          out.entries_.push_back({m, delta});
          placed = true;
        }
        out.entries_.push_back({p, d});
      }
    }
    if (!placed && delta > 0) out.entries_.push_back({m, delta});
    return out;
  }

  std::vector<std::pair<int, int>> entries_;
};

/// Ordered set of distinct multi-indices; the active set always contains the
/// zero index.
class IndexSet {
public:
  IndexSet() = default;
  explicit IndexSet(std::vector<MultiIndex> indices)
      : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()),
                   indices_.end());
  }

  static IndexSet initial() { return IndexSet({MultiIndex::zero()}); }

  int size() const { return static_cast<int>(indices_.size()); }
  const MultiIndex& operator[](int i) const { return indices_[i]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  bool contains(const MultiIndex& nu) const {
    return std::binary_search(indices_.begin(), indices_.end(), nu);
  }
  int position(const MultiIndex& nu) const {
    auto it = std::lower_bound(indices_.begin(), indices_.end(), nu);
    if (it == indices_.end() || !(*it == nu)) return -1;
    return static_cast<int>(it - indices_.begin());
  }

  IndexSet with(const std::vector<MultiIndex>& more) const {
    std::vector<MultiIndex> all = indices_;
    all.insert(all.end(), more.begin(), more.end());
    return IndexSet(std::move(all));
  }

  std::vector<int> support() const {
    std::set<int> s;
    for (const auto& nu : indices_) {
      for (int m : nu.support()) s.insert(m);
    }
    return {s.begin(), s.end()};
  }
  /// M_P: number of active parameters.
  int n_active_parameters() const { return static_cast<int>(support().size()); }

  int max_support() const {
    int m = 0;
    for (const auto& nu : indices_) m = std::max(m, nu.max_support());
    return m;
  }
  int degree() const {
    int d = 0;
    for (const auto& nu : indices_) d = std::max(d, nu.total_degree());
    return d;
  }

private:
  std::vector<MultiIndex> indices_;
};

/// Detail index set: neighbors nu +- eps_m of the active set, for parameters
/// m <= M_P + m_bar (capped by the problem's index universe when finite),
/// excluding members of the active set.
inline IndexSet detail_set(const IndexSet& active, int m_bar,
                           int max_parameters = 0) {
  if (!active.contains(MultiIndex::zero())) {
    throw Error("detail_set: active set must contain the zero index");
  }
  int m_max = active.n_active_parameters() + m_bar;
  if (max_parameters > 0) m_max = std::min(m_max, max_parameters);
  std::vector<MultiIndex> out;
  for (const auto& nu : active.indices()) {
    for (int m = 1; m <= m_max; ++m) {
      const MultiIndex up = nu.raised(m);
      if (!active.contains(up)) out.push_back(up);
      if (nu[m] >= 1) {
        const MultiIndex down = nu.lowered(m);
        if (!active.contains(down)) out.push_back(down);
      }
    }
  }
  return IndexSet(std::move(out));
}

}  // namespace mlsg

#endif  // MLSG_MULTIINDEX_HPP
