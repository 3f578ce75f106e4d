// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_ASSEMBLY_HPP
#define MLSG_ASSEMBLY_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "mlsg/coefficient.hpp"
#include "mlsg/mesh.hpp"
#include "mlsg/overlay.hpp"
#include "mlsg/quadrature.hpp"

namespace mlsg {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

namespace detail {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Builds a CSC matrix from triplets with a canonical summation order
/// (sorted by column, row, value), so that assembled entries do not depend
/// on the cell enumeration order.
inline SparseMatrix from_triplets(int rows, int cols,
                                  std::vector<Triplet>& trip) {
  SparseMatrix m(rows, cols);
  if (trip.empty()) {
    m.makeCompressed();
    return m;
  }
  std::sort(trip.begin(), trip.end(), [](const Triplet& x, const Triplet& y) {
    if (x.col != y.col) return x.col < y.col;
    if (x.row != y.row) return x.row < y.row;
    return x.value < y.value;
  });
  std::vector<int> col_counts(cols, 0);
  {
    std::size_t i = 0;
    while (i < trip.size()) {
      std::size_t j = i + 1;
      while (j < trip.size() && trip[j].col == trip[i].col &&
             trip[j].row == trip[i].row) {
        ++j;
      }
      ++col_counts[trip[i].col];
      i = j;
    }
  }
  m.reserve(Eigen::Map<Eigen::VectorXi>(col_counts.data(), cols));
  {
    std::size_t i = 0;
    while (i < trip.size()) {
      double sum = trip[i].value;
      std::size_t j = i + 1;
      while (j < trip.size() && trip[j].col == trip[i].col &&
             trip[j].row == trip[i].row) {
        sum += trip[j].value;
        ++j;
      }
      m.insert(trip[i].row, trip[i].col) = sum;
      i = j;
    }
  }
  m.makeCompressed();
  return m;
}

}  // namespace detail

/// 3x3 local P1 stiffness matrix entries grad_j . grad_i |T| (unit
/// coefficient).
inline std::array<std::array<double, 3>, 3> local_stiffness(
    const Triangle& t) {
  const auto g = t.hat_gradients();
  const double a = t.area();
  std::array<std::array<double, 3>, 3> k{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      k[i][j] = g[i].dot(g[j]) * a;
    }
  }
  return k;
}

/// Weighted stiffness matrix over the interior dofs of one mesh:
/// entries  int a_m grad(phi_j) . grad(phi_i).
inline SparseMatrix stiffness_same(const Mesh& mesh,
                                   const CoefficientField& coeff, int m,
                                   const QuadratureRule& quad) {
  const int n = mesh.n_interior();
  std::vector<detail::Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.n_elements()) * 9);
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const Triangle tri = mesh.triangle(t);
    const double integral = coeff.cell_integral(m, tri, quad);
    if (integral == 0.0) continue;
    const auto g = tri.hat_gradients();
    const auto& el = mesh.element(t);
    for (int i = 0; i < 3; ++i) {
      const int di = mesh.dof_of_vertex(el.v[i]);
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = mesh.dof_of_vertex(el.v[j]);
        if (dj < 0) continue;
        trip.push_back({di, dj, g[j].dot(g[i]) * integral});
      }
    }
  }
  return detail::from_triplets(n, n, trip);
}

inline SparseMatrix stiffness_same(const Mesh& mesh,
                                   const CoefficientField& coeff, int m) {
  static const QuadratureRule quad = triangle_rule(4);
  return stiffness_same(mesh, coeff, m, quad);
}

/// Cross-mesh weighted stiffness matrix, rows indexed by the interior dofs
/// of mesh_row and columns by mesh_col. Integrals are evaluated over the
/// overlay cells, on which both hat gradients are constant.
inline SparseMatrix stiffness_cross(const Mesh& mesh_row, const Mesh& mesh_col,
                                    const CoefficientField& coeff, int m,
                                    const QuadratureRule& quad,
                                    const Overlay* precomputed = nullptr) {
  Overlay local;
  const Overlay* ov = precomputed;
  if (ov == nullptr) {
    local = build_overlay(mesh_row, mesh_col);
    ov = &local;
  }
  std::vector<detail::Triplet> trip;
  trip.reserve(ov->cells.size() * 9);
  for (const auto& cell : ov->cells) {
    const Triangle tri = ov->cell_triangle(cell);
    const double integral = coeff.cell_integral(m, tri, quad);
    if (integral == 0.0) continue;
    const auto [ta, tb] = ov->cell_elements(cell);
    const auto ga = mesh_row.triangle(ta).hat_gradients();
    const auto gb = mesh_col.triangle(tb).hat_gradients();
    const auto& ea = mesh_row.element(ta);
    const auto& eb = mesh_col.element(tb);
    for (int i = 0; i < 3; ++i) {
      const int di = mesh_row.dof_of_vertex(ea.v[i]);
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = mesh_col.dof_of_vertex(eb.v[j]);
        if (dj < 0) continue;
        trip.push_back({di, dj, gb[j].dot(ga[i]) * integral});
      }
    }
  }
  return detail::from_triplets(mesh_row.n_interior(), mesh_col.n_interior(),
                               trip);
}

inline SparseMatrix stiffness_cross(const Mesh& mesh_row, const Mesh& mesh_col,
                                    const CoefficientField& coeff, int m) {
  static const QuadratureRule quad = triangle_rule(4);
  return stiffness_cross(mesh_row, mesh_col, coeff, m, quad);
}

/// Load vector [b]_i = int f phi_i over the interior dofs.
inline Vector load_vector(const Mesh& mesh, const SpatialFunction& f,
                          const QuadratureRule& quad) {
  Vector b = Vector::Zero(mesh.n_interior());
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const Triangle tri = mesh.triangle(t);
    const auto& el = mesh.element(t);
    const double scale = 2.0 * tri.area();
    for (const auto& q : quad.points) {
      const double fw =
          scale * q.weight *
          f(tri.point(q.lambda[0], q.lambda[1], q.lambda[2]));
      for (int i = 0; i < 3; ++i) {
        const int di = mesh.dof_of_vertex(el.v[i]);
        if (di >= 0) b[di] += fw * q.lambda[i];
      }
    }
  }
  return b;
}

inline Vector load_vector(const Mesh& mesh, const SpatialFunction& f) {
  static const QuadratureRule quad = triangle_rule(4);
  return load_vector(mesh, f, quad);
}

/// Diagonal of the a_0-weighted stiffness matrix: ||phi_z||_D^2 per interior
/// dof; denominators of the two-level indicators.
inline Vector energy_diagonal(const Mesh& mesh, const CoefficientField& coeff,
                              const QuadratureRule& quad) {
  Vector d = Vector::Zero(mesh.n_interior());
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const Triangle tri = mesh.triangle(t);
    const double integral = coeff.cell_integral(0, tri, quad);
    const auto g = tri.hat_gradients();
    const auto& el = mesh.element(t);
    for (int i = 0; i < 3; ++i) {
      const int di = mesh.dof_of_vertex(el.v[i]);
      if (di >= 0) d[di] += g[i].dot(g[i]) * integral;
    }
  }
  return d;
}

inline double energy_norm(const Mesh& mesh, const CoefficientField& coeff,
                          const Vector& dofs) {
  if (dofs.size() != mesh.n_interior()) {
    throw Error("energy_norm: dof vector does not match mesh");
  }
  const SparseMatrix k = stiffness_same(mesh, coeff, 0);
  return std::sqrt(std::max(0.0, dofs.dot(k * dofs)));
}

inline void dump_matrix_coo(const SparseMatrix& m, std::ostream& os) {
  os.precision(17);
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace mlsg

#endif  // MLSG_ASSEMBLY_HPP
