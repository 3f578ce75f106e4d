// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_OVERLAY_HPP
#define MLSG_OVERLAY_HPP

#include <algorithm>
#include <sstream>
#include <vector>

#include "mlsg/common.hpp"
#include "mlsg/mesh.hpp"

namespace mlsg {

enum class CellSide { first, second };

/// One cell of the overlay of two meshes: an element of one mesh together
/// with the element of the other mesh that contains it.
struct OverlayCell {
  CellSide side = CellSide::first;
  int element_id = -1;    // in the mesh named by `side`
  int container_id = -1;  // in the other mesh
};

struct Overlay {
  const Mesh* first = nullptr;
  const Mesh* second = nullptr;
  std::vector<OverlayCell> cells;

  Triangle cell_triangle(const OverlayCell& c) const {
    return c.side == CellSide::first ? first->triangle(c.element_id)
                                     : second->triangle(c.element_id);
  }
  /// Element ids of the cell in (first mesh, second mesh) order.
  std::pair<int, int> cell_elements(const OverlayCell& c) const {
    return c.side == CellSide::first
               ? std::make_pair(c.element_id, c.container_id)
               : std::make_pair(c.container_id, c.element_id);
  }
};

/// Overlay (coarsest common refinement) of two NVB refinements of the same
/// initial mesh. Containment is decided by the centroid test: the center of
/// mass of an element lies strictly inside all of its NVB ancestors.
inline Overlay build_overlay(const Mesh& a, const Mesh& b) {
  if (a.n_ancestors() != b.n_ancestors()) {
    throw Error("build_overlay: meshes have mismatched initial ancestors");
  }
  const int n_anc = a.n_ancestors();
  std::vector<std::vector<int>> bucket_a(n_anc), bucket_b(n_anc);
  for (int t = 0; t < a.n_elements(); ++t) {
    bucket_a[a.element(t).ancestor].push_back(t);
  }
  for (int t = 0; t < b.n_elements(); ++t) {
    bucket_b[b.element(t).ancestor].push_back(t);
  }

  constexpr double kStrict = 1e-12;
  Overlay out;
  out.first = &a;
  out.second = &b;
  for (int anc = 0; anc < n_anc; ++anc) {
    for (int ta : bucket_a[anc]) {
      const int level_a = a.element(ta).level;
      const Vec2 sa = a.triangle(ta).centroid();
      int container = -1;
      for (int tb : bucket_b[anc]) {
        if (b.element(tb).level > level_a) continue;
        const auto lam = barycentric(sa, b.triangle(tb));
        if (lam[0] > kStrict && lam[1] > kStrict && lam[2] > kStrict) {
          if (container != -1) {
            std::ostringstream msg;
            msg << "build_overlay: centroid of element " << ta
                << " lies inside two candidate containers (" << container
                << ", " << tb << ") of ancestor " << anc;
            throw Error(msg.str());
          }
          container = tb;
        }
      }
      if (container != -1) {
        out.cells.push_back({CellSide::first, ta, container});
        continue;
      }
      // ta strictly contains finer elements of b
      bool found = false;
      const Triangle tri_a = a.triangle(ta);
      for (int tb : bucket_b[anc]) {
        if (b.element(tb).level <= level_a) continue;
        const auto lam = barycentric(b.triangle(tb).centroid(), tri_a);
        if (lam[0] > kStrict && lam[1] > kStrict && lam[2] > kStrict) {
          out.cells.push_back({CellSide::second, tb, ta});
          found = true;
        }
      }
      if (!found) {
        std::ostringstream msg;
        msg << "build_overlay: element " << ta << " of ancestor " << anc
            << " has neither a container nor contained elements";
        throw Error(msg.str());
      }
    }
  }
  std::sort(out.cells.begin(), out.cells.end(),
            [&](const OverlayCell& x, const OverlayCell& y) {
              const int anc_x = x.side == CellSide::first
                                    ? a.element(x.element_id).ancestor
                                    : b.element(x.element_id).ancestor;
              const int anc_y = y.side == CellSide::first
                                    ? a.element(y.element_id).ancestor
                                    : b.element(y.element_id).ancestor;
              if (anc_x != anc_y) return anc_x < anc_y;
              if (x.side != y.side) return x.side == CellSide::first;
              return x.element_id < y.element_id;
            });
  return out;
}

}  // namespace mlsg

#endif  // MLSG_OVERLAY_HPP
