// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_MARKING_HPP
#define MLSG_MARKING_HPP

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "mlsg/estimator.hpp"
#include "mlsg/mesh.hpp"

namespace mlsg {

enum class MarkCriterion { A, B, C };

struct MarkingConfig {
  MarkCriterion criterion = MarkCriterion::C;
  double theta_x = 0.5;
  double theta_p = 0.5;
  double theta = 0.5;
  double vartheta = 1.0;

  void validate() const {
    if (!(theta_x > 0.0 && theta_x <= 1.0) ||
        !(theta_p > 0.0 && theta_p <= 1.0) || !(theta > 0.0 && theta <= 1.0)) {
      throw Error("marking: theta parameters must lie in (0, 1]");
    }
    if (!(vartheta > 0.0)) throw Error("marking: vartheta must be positive");
  }
};

struct MarkResult {
  std::vector<MarkedVertexSet> spatial;  // one per active index
  std::vector<MultiIndex> parametric;    // subset of the detail set

  bool spatial_empty() const {
    for (const auto& s : spatial) {
      if (!s.empty()) return false;
    }
    return true;
  }
  bool empty() const { return spatial_empty() && parametric.empty(); }
  std::size_t n_spatial_marks() const {
    std::size_t n = 0;
    for (const auto& s : spatial) n += s.size();
    return n;
  }
};

/// Minimal-cardinality Dörfler selection: positions of the values whose
/// squared sum first reaches theta times the total, largest first, ties
/// broken by position. Greedy on the sorted order is cardinality-minimal.
inline std::vector<int> doerfler_min(const std::vector<double>& values,
                                     double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw Error("doerfler_min: theta must lie in (0, 1]");
  }
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (values[i] != values[j]) return values[i] > values[j];
    return i < j;
  });
  double tot = 0.0;
  for (int i : order) tot += values[i] * values[i];
  const double threshold = theta * tot;
  std::vector<int> selected;
  double cum = 0.0;
  for (int i : order) {
    if (cum >= threshold) break;
    selected.push_back(i);
    cum += values[i] * values[i];
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

namespace detail {

struct JointKey {
  bool parametric;
  int block;   // active-set position (spatial) or detail position (parametric)
  Edge edge;   // spatial only
};

/// Flattened spatial indicators in canonical (block, edge) order.
inline void flatten_spatial(const Indicators& ind,
                            std::vector<JointKey>& keys,
                            std::vector<double>& values) {
  for (int i = 0; i < static_cast<int>(ind.spatial.size()); ++i) {
    const auto& sb = ind.spatial[i];
    for (std::size_t k = 0; k < sb.edges.size(); ++k) {
      keys.push_back({false, i, sb.edges[k]});
      values.push_back(sb.values[k]);
    }
  }
}

inline MarkResult from_joint(const std::vector<JointKey>& keys,
                             const std::vector<int>& selected, int n_blocks,
                             const IndexSet& detail) {
  MarkResult out;
  out.spatial.resize(n_blocks);
  std::vector<std::vector<Edge>> per_block(n_blocks);
  for (int s : selected) {
    const auto& k = keys[s];
    if (k.parametric) {
      out.parametric.push_back(detail[k.block]);
    } else {
      per_block[k.block].push_back(k.edge);
    }
  }
  for (int i = 0; i < n_blocks; ++i) {
    out.spatial[i] = MarkedVertexSet(std::move(per_block[i]));
  }
  return out;
}

}  // namespace detail

/// Criterion with separate refinement: the estimator components decide the
/// branch, then a single Dörfler pass selects within the winning side.
inline MarkResult mark_criterion_A(const Indicators& ind,
                                   const MarkingConfig& cfg) {
  cfg.validate();
  MarkResult out;
  out.spatial.resize(ind.spatial.size());
  if (cfg.vartheta * ind.parametric_sq <= ind.spatial_sq) {
    std::vector<detail::JointKey> keys;
    std::vector<double> values;
    detail::flatten_spatial(ind, keys, values);
    return detail::from_joint(keys, doerfler_min(values, cfg.theta_x),
                              static_cast<int>(ind.spatial.size()),
                              ind.detail);
  }
  for (int q : doerfler_min(ind.parametric, cfg.theta_p)) {
    out.parametric.push_back(ind.detail[q]);
  }
  return out;
}

/// Criterion with separate refinement steered by realized error reduction:
/// tentative marks on both sides, with the spatial side credited for the
/// vertices its NVB closure would actually create.
inline MarkResult mark_criterion_B(const Indicators& ind,
                                   const MarkingConfig& cfg,
                                   const MultilevelSpace& space) {
  cfg.validate();
  std::vector<detail::JointKey> keys;
  std::vector<double> values;
  detail::flatten_spatial(ind, keys, values);
  MarkResult tentative_spatial =
      detail::from_joint(keys, doerfler_min(values, cfg.theta_x),
                         static_cast<int>(ind.spatial.size()), ind.detail);
  const std::vector<int> tentative_parametric =
      doerfler_min(ind.parametric, cfg.theta_p);

  double realized_sq = 0.0;
  for (int i = 0; i < space.n_blocks(); ++i) {
    if (tentative_spatial.spatial[i].empty()) continue;
    const Mesh refined = refine(*space.mesh(i), tentative_spatial.spatial[i]);
    for (const auto& [edge, mid] : refined.parent_midpoints()) {
      if (space.mesh(i)->is_boundary_edge(edge)) continue;
      const double v = ind.spatial_value(i, edge);
      realized_sq += v * v;
    }
  }
  double marked_parametric_sq = 0.0;
  for (int q : tentative_parametric) {
    marked_parametric_sq += ind.parametric[q] * ind.parametric[q];
  }

  if (cfg.vartheta * marked_parametric_sq <= realized_sq) {
    tentative_spatial.parametric.clear();
    return tentative_spatial;
  }
  MarkResult out;
  out.spatial.resize(ind.spatial.size());
  for (int q : tentative_parametric) out.parametric.push_back(ind.detail[q]);
  return out;
}

/// Combined refinement: one Dörfler pass over the joint set of spatial and
/// parametric indicators; may mark both kinds at once.
inline MarkResult mark_criterion_C(const Indicators& ind,
                                   const MarkingConfig& cfg) {
  cfg.validate();
  std::vector<detail::JointKey> keys;
  std::vector<double> values;
  detail::flatten_spatial(ind, keys, values);
  for (int q = 0; q < ind.detail.size(); ++q) {
    keys.push_back({true, q, Edge()});
    values.push_back(ind.parametric[q]);
  }
  return detail::from_joint(keys, doerfler_min(values, cfg.theta),
                            static_cast<int>(ind.spatial.size()), ind.detail);
}

inline MarkResult mark(const Indicators& ind, const MarkingConfig& cfg,
                       const MultilevelSpace& space) {
  switch (cfg.criterion) {
    case MarkCriterion::A:
      return mark_criterion_A(ind, cfg);
    case MarkCriterion::B:
      return mark_criterion_B(ind, cfg, space);
    case MarkCriterion::C:
      return mark_criterion_C(ind, cfg);
  }
  throw Error("mark: unknown criterion");
}

}  // namespace mlsg

#endif  // MLSG_MARKING_HPP
