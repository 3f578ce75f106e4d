// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_BLOCK_SYSTEM_HPP
#define MLSG_BLOCK_SYSTEM_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <mutex>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mlsg/assembly.hpp"
#include "mlsg/legendre.hpp"
#include "mlsg/multiindex.hpp"

namespace mlsg {

using MeshPtr = std::shared_ptr<const Mesh>;

/// V = direct sum over nu in P of X(T_nu) (x) span{P_nu}: an index set with
/// one mesh per multi-index.
class MultilevelSpace {
public:
  MultilevelSpace() = default;
  MultilevelSpace(IndexSet index_set, std::vector<MeshPtr> meshes)
      : index_set_(std::move(index_set)), meshes_(std::move(meshes)) {
    if (!index_set_.contains(MultiIndex::zero())) {
      throw Error("space: index set must contain the zero index");
    }
    if (static_cast<int>(meshes_.size()) != index_set_.size()) {
      throw Error("space: one mesh per index required");
    }
    offsets_.resize(meshes_.size() + 1, 0);
    for (std::size_t i = 0; i < meshes_.size(); ++i) {
      offsets_[i + 1] = offsets_[i] + meshes_[i]->n_interior();
    }
  }

  const IndexSet& index_set() const { return index_set_; }
  int n_blocks() const { return index_set_.size(); }
  const MeshPtr& mesh(int block) const { return meshes_[block]; }
  const std::vector<MeshPtr>& meshes() const { return meshes_; }
  int block_size(int block) const {
    return offsets_[block + 1] - offsets_[block];
  }
  int block_offset(int block) const { return offsets_[block]; }
  int total_dofs() const { return offsets_.back(); }
  const std::vector<int>& offsets() const { return offsets_; }

private:
  IndexSet index_set_;
  std::vector<MeshPtr> meshes_;
  std::vector<int> offsets_;
};

/// Block-structured coefficient vector stored flat in the block layout of a
/// MultilevelSpace.
struct BlockVector {
  Vector data;
  std::vector<int> offsets;

  BlockVector() = default;
  explicit BlockVector(const MultilevelSpace& space)
      : data(Vector::Zero(space.total_dofs())), offsets(space.offsets()) {}

  int n_blocks() const { return static_cast<int>(offsets.size()) - 1; }
  auto block(int i) { return data.segment(offsets[i], offsets[i + 1] - offsets[i]); }
  auto block(int i) const {
    return data.segment(offsets[i], offsets[i + 1] - offsets[i]);
  }
};

/// Memoizes stiffness matrices by (row mesh, column mesh, m), sparse
/// factorizations of the mean-coefficient matrices, and uniform refinements.
/// Keys are mesh object identities; the cache holds owning pointers, and
/// meshes are immutable, so entries can never go stale. One cache serves one
/// coefficient field.
class AssemblyCache {
public:
  explicit AssemblyCache(std::shared_ptr<const CoefficientField> coeff,
                         int quad_degree = 4)
      : coeff_(std::move(coeff)), quad_(triangle_rule(quad_degree)) {}

  const CoefficientField& coefficient() const { return *coeff_; }
  const QuadratureRule& quadrature() const { return quad_; }

  std::shared_ptr<const SparseMatrix> stiffness(const MeshPtr& row,
                                                const MeshPtr& col, int m) {
    const Key key{row.get(), col.get(), m};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = matrices_.find(key);
      if (it != matrices_.end()) return it->second.matrix;
    }
    auto mat = std::make_shared<SparseMatrix>(
        row.get() == col.get()
            ? stiffness_same(*row, *coeff_, m, quad_)
            : stiffness_cross(*row, *col, *coeff_, m, quad_));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = matrices_.try_emplace(key, Entry{row, col, mat});
    return it->second.matrix;
  }

  using Factorization = Eigen::SimplicialLDLT<SparseMatrix>;

  std::shared_ptr<const Factorization> mean_factorization(const MeshPtr& mesh) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = factors_.find(mesh.get());
      if (it != factors_.end()) return it->second.factorization;
    }
    auto k0 = stiffness(mesh, mesh, 0);
    auto f = std::make_shared<Factorization>(*k0);
    if (f->info() != Eigen::Success) {
      throw Error("mean-coefficient stiffness factorization failed");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] =
        factors_.try_emplace(mesh.get(), FactorEntry{mesh, f});
    return it->second.factorization;
  }

  MeshPtr uniform_refinement(const MeshPtr& mesh) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = fines_.find(mesh.get());
    if (it != fines_.end()) return it->second.fine;
    auto fine = std::make_shared<const Mesh>(uniform_refine(*mesh));
    fines_.emplace(mesh.get(), FineEntry{mesh, fine});
    return fine;
  }

  /// Drops cached matrices/refinements not reachable from the given meshes
  /// (factorizations of live meshes are kept). Called between adaptive
  /// iterations to bound memory.
  void retain(const std::vector<MeshPtr>& live) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::unordered_set<const Mesh*> keep;
    for (const auto& m : live) keep.insert(m.get());
    for (auto it = fines_.begin(); it != fines_.end();) {
      if (keep.count(it->first)) {
        keep.insert(it->second.fine.get());
        ++it;
      } else {
        it = fines_.erase(it);
      }
    }
    for (auto it = matrices_.begin(); it != matrices_.end();) {
      if (keep.count(it->first.row) && keep.count(it->first.col)) {
        ++it;
      } else {
        it = matrices_.erase(it);
      }
    }
    for (auto it = factors_.begin(); it != factors_.end();) {
      if (keep.count(it->first)) {
        ++it;
      } else {
        it = factors_.erase(it);
      }
    }
  }

  std::size_t n_cached_matrices() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return matrices_.size();
  }

private:
  struct Key {
    const Mesh* row;
    const Mesh* col;
    int m;
    bool operator==(const Key& o) const {
      return row == o.row && col == o.col && m == o.m;
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      auto h = std::hash<const void*>();
      return h(k.row) ^ (h(k.col) * 1000003u) ^ std::hash<int>()(k.m);
    }
  };
  struct Entry {
    MeshPtr row_keepalive;
    MeshPtr col_keepalive;
    std::shared_ptr<const SparseMatrix> matrix;
  };
  struct FactorEntry {
    MeshPtr keepalive;
    std::shared_ptr<const Factorization> factorization;
  };
  struct FineEntry {
    MeshPtr keepalive;
    MeshPtr fine;
  };

  std::shared_ptr<const CoefficientField> coeff_;
  QuadratureRule quad_;
  mutable std::mutex mutex_;
  std::unordered_map<Key, Entry, KeyHash> matrices_;
  std::unordered_map<const Mesh*, FactorEntry> factors_;
  std::unordered_map<const Mesh*, FineEntry> fines_;
};

/// Matrix-free block Galerkin operator A_{nu mu} = sum_m [G_m]_{nu mu}
/// K_m^{nu mu}. Only the matrices with a nonzero G entry are stored; the
/// transpose pairing K_m^{nu mu} = (K_m^{mu nu})^T halves the assembly work.
class BlockOperator {
public:
  struct Term {
    int row_block;
    int col_block;
    double g;
    std::shared_ptr<const SparseMatrix> k;
    bool transposed;
  };

  BlockOperator() = default;
  BlockOperator(const MultilevelSpace& space, std::vector<Term> terms)
      : offsets_(space.offsets()), terms_(std::move(terms)) {
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
      if (a.row_block != b.row_block) return a.row_block < b.row_block;
      if (a.col_block != b.col_block) return a.col_block < b.col_block;
      return a.transposed < b.transposed;
    });
    row_ranges_.assign(offsets_.size(), 0);
    for (const auto& t : terms_) row_ranges_[t.row_block + 1]++;
    for (std::size_t i = 1; i < row_ranges_.size(); ++i) {
      row_ranges_[i] += row_ranges_[i - 1];
    }
  }

  int total_dofs() const { return offsets_.back(); }
  int n_blocks() const { return static_cast<int>(offsets_.size()) - 1; }
  const std::vector<Term>& terms() const { return terms_; }

  std::size_t n_stored_matrices() const {
    std::set<const SparseMatrix*> unique;
    for (const auto& t : terms_) unique.insert(t.k.get());
    return unique.size();
  }

  void apply(const Vector& x, Vector& y) const {
    if (x.size() != total_dofs()) throw Error("matvec: shape mismatch");
    y.resize(x.size());
    threading::parallel_for(n_blocks(), [&](std::size_t rb) {
      auto yseg = y.segment(offsets_[rb], offsets_[rb + 1] - offsets_[rb]);
      yseg.setZero();
      for (std::size_t ti = row_ranges_[rb]; ti < row_ranges_[rb + 1]; ++ti) {
        const Term& t = terms_[ti];
        const auto xseg = x.segment(offsets_[t.col_block],
                                    offsets_[t.col_block + 1] -
                                        offsets_[t.col_block]);
        if (t.transposed) {
          yseg.noalias() += t.g * (t.k->transpose() * xseg);
        } else {
          yseg.noalias() += t.g * (*t.k * xseg);
        }
      }
    });
  }

  Vector apply(const Vector& x) const {
    Vector y;
    apply(x, y);
    return y;
  }

private:
  std::vector<int> offsets_;
  std::vector<Term> terms_;
  std::vector<std::size_t> row_ranges_;
};

/// Assembles exactly the stiffness matrices with nonzero G entries.
inline BlockOperator assemble_operator(const MultilevelSpace& space,
                                       const RecurrenceTable& table,
                                       AssemblyCache& cache) {
  const IndexSet& p = space.index_set();
  std::vector<BlockOperator::Term> terms;
  for (int i = 0; i < p.size(); ++i) {
    terms.push_back({i, i, 1.0, cache.stiffness(space.mesh(i), space.mesh(i), 0),
                     false});
  }
  const int m_max = p.max_support();
  for (int i = 0; i < p.size(); ++i) {
    const MultiIndex& nu = p[i];
    for (int m = 1; m <= m_max; ++m) {
      const int j = p.position(nu.raised(m));
      if (j < 0) continue;
      const double g = table.beta(nu[m]);
      // K_m^{mu nu} with rows on mesh_j (mu = nu + eps_m), cols on mesh_i
      auto k = cache.stiffness(space.mesh(j), space.mesh(i), m);
      terms.push_back({j, i, g, k, false});
      terms.push_back({i, j, g, k, true});
    }
  }
  return BlockOperator(space, terms);
}

/// b_0 = load vector of the zero-index mesh; all other blocks vanish for a
/// deterministic right-hand side.
inline BlockVector assemble_rhs(const MultilevelSpace& space,
                                const SpatialFunction& f) {
  BlockVector b(space);
  const int zero_block = space.index_set().position(MultiIndex::zero());
  b.block(zero_block) = load_vector(*space.mesh(zero_block), f);
  return b;
}

/// Block-diagonal mean-based preconditioner: per-block sparse LDLT solves
/// with the mean-coefficient matrices K_0^{nu nu}.
class MeanPreconditioner {
public:
  MeanPreconditioner() = default;
  MeanPreconditioner(const MultilevelSpace& space, AssemblyCache& cache)
      : offsets_(space.offsets()) {
    solvers_.reserve(space.n_blocks());
    for (int i = 0; i < space.n_blocks(); ++i) {
      solvers_.push_back(cache.mean_factorization(space.mesh(i)));
    }
  }

  void apply(const Vector& r, Vector& z) const {
    z.resize(r.size());
    threading::parallel_for(solvers_.size(), [&](std::size_t i) {
      const int lo = offsets_[i];
      const int len = offsets_[i + 1] - lo;
      z.segment(lo, len) = solvers_[i]->solve(r.segment(lo, len));
    });
  }

  Vector apply(const Vector& r) const {
    Vector z;
    apply(r, z);
    return z;
  }

private:
  std::vector<int> offsets_;
  std::vector<std::shared_ptr<const AssemblyCache::Factorization>> solvers_;
};

enum class KrylovMethod { minres, cg };

struct SolveOptions {
  double tol = 1e-9;
  int max_iterations = 200;
  KrylovMethod method = KrylovMethod::minres;
};

struct SolveResult {
  Vector x;
  int iterations = 0;
  std::vector<double> residual_history;  // preconditioned residual norms
};

class SolveFailure : public Error {
public:
  SolveFailure(const std::string& what, std::vector<double> history)
      : Error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

namespace detail {

/// Preconditioned MINRES (Paige/Saunders recurrences). The tracked quantity
/// phibar equals the M^{-1}-norm of the residual; the iteration stops when it
/// drops below tol times the M^{-1}-norm of b.
inline SolveResult minres(const BlockOperator& a, const Vector& b,
                          const MeanPreconditioner& prec,
                          const SolveOptions& opts, const Vector* x0) {
  SolveResult res;
  const int n = a.total_dofs();
  Vector x = x0 ? *x0 : Vector(Vector::Zero(n));
  const double bnorm = std::sqrt(std::max(0.0, b.dot(prec.apply(b))));
  if (bnorm == 0.0) {
    res.x = Vector::Zero(n);
    return res;
  }
  Vector r1 = b - a.apply(x);
  Vector y = prec.apply(r1);
  double beta = std::sqrt(std::max(0.0, r1.dot(y)));
  res.residual_history.push_back(beta);
  if (beta <= opts.tol * bnorm) {
    res.x = std::move(x);
    return res;
  }

  Vector r2 = r1;
  Vector w = Vector::Zero(n);
  Vector w2 = Vector::Zero(n);
  Vector v(n), w1(n);
  double oldb = 0.0, dbar = 0.0, epsln = 0.0, phibar = beta;
  double cs = -1.0, sn = 0.0;

  for (int itn = 1; itn <= opts.max_iterations; ++itn) {
    v = y / beta;
    y = a.apply(v);
    if (itn >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = prec.apply(r2);
    oldb = beta;
    beta = std::sqrt(std::max(0.0, r2.dot(y)));

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::sqrt(gbar * gbar + beta * beta);
    gamma = std::max(gamma, 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;

    res.iterations = itn;
    res.residual_history.push_back(phibar);
    if (phibar <= opts.tol * bnorm) {
      res.x = std::move(x);
      return res;
    }
  }
  throw SolveFailure("minres: no convergence within iteration limit",
                     res.residual_history);
}

inline SolveResult pcg(const BlockOperator& a, const Vector& b,
                       const MeanPreconditioner& prec,
                       const SolveOptions& opts, const Vector* x0) {
  SolveResult res;
  const int n = a.total_dofs();
  Vector x = x0 ? *x0 : Vector(Vector::Zero(n));
  const double bnorm = std::sqrt(std::max(0.0, b.dot(prec.apply(b))));
  if (bnorm == 0.0) {
    res.x = Vector::Zero(n);
    return res;
  }
  Vector r = b - a.apply(x);
  Vector z = prec.apply(r);
  double rz = r.dot(z);
  res.residual_history.push_back(std::sqrt(std::max(0.0, rz)));
  if (res.residual_history.back() <= opts.tol * bnorm) {
    res.x = std::move(x);
    return res;
  }
  Vector p = z;
  for (int itn = 1; itn <= opts.max_iterations; ++itn) {
    const Vector ap = a.apply(p);
    const double alpha = rz / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    z = prec.apply(r);
    const double rz_next = r.dot(z);
    res.iterations = itn;
    res.residual_history.push_back(std::sqrt(std::max(0.0, rz_next)));
    if (res.residual_history.back() <= opts.tol * bnorm) {
      res.x = std::move(x);
      return res;
    }
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw SolveFailure("pcg: no convergence within iteration limit",
                     res.residual_history);
}

}  // namespace detail

inline SolveResult solve(const BlockOperator& a, const BlockVector& b,
                         const MeanPreconditioner& prec,
                         const SolveOptions& opts = {},
                         const BlockVector* x0 = nullptr) {
  return opts.method == KrylovMethod::minres
             ? detail::minres(a, b.data, prec, opts, x0 ? &x0->data : nullptr)
             : detail::pcg(a, b.data, prec, opts, x0 ? &x0->data : nullptr);
}

/// Dense assembly of the block operator; test oracle, gated to small sizes.
inline Eigen::MatrixXd dense_operator(const BlockOperator& a,
                                      const std::vector<int>& offsets) {
  if (a.total_dofs() > 2000) {
    throw Error("dense_operator: instance too large for the dense oracle");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.total_dofs(), a.total_dofs());
  for (const auto& t : a.terms()) {
    Eigen::MatrixXd k = Eigen::MatrixXd(*t.k);
    if (t.transposed) k.transposeInPlace();
    m.block(offsets[t.row_block], offsets[t.col_block], k.rows(), k.cols()) +=
        t.g * k;
  }
  return m;
}

}  // namespace mlsg

#endif  // MLSG_BLOCK_SYSTEM_HPP
